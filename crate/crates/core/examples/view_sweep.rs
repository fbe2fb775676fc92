//! Placement error against the number of rendered views.
//!
//! cargo run --release --example view_sweep

use mvlandmark::consensus::RansacConfig;
use mvlandmark::detector::OracleConfig;
use mvlandmark::mesh::shapes;
use mvlandmark::pipeline::{view_sweep, DetectorSource, LandmarkEntry, LandmarkSet, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = shapes::icosphere(100.0, 3);
    let gt = LandmarkSet {
        schema_name: "icosahedron-corners".into(),
        landmarks: mesh.vertices()[..12]
            .iter()
            .enumerate()
            .map(|(i, p)| LandmarkEntry {
                id: i,
                name: format!("corner{i}"),
                xyz: p.coords.into(),
            })
            .collect(),
    };
    let counts = [25, 50, 75, 100];
    let mut sums = [0.0; 4];
    let seeds = 5;
    for seed in 0..seeds {
        let config = PipelineConfig {
            detector: DetectorSource::Oracle(OracleConfig {
                noise_sigma: 2.0,
                outlier_rate: 0.2,
                dropout_rate: 0.1,
                rng_seed: seed,
                ..Default::default()
            }),
            ransac: RansacConfig {
                inlier_threshold: 8.0,
                rng_seed: seed,
                ..Default::default()
            },
            sampling: mvlandmark::camera::ViewSamplingConfig {
                rng_seed: seed,
                ..Default::default()
            },
            ..Default::default()
        };
        for (sum, row) in sums.iter_mut().zip(view_sweep(&mesh, &gt, &counts, &config)?) {
            *sum += row.mean_error_mm.unwrap_or(f64::NAN);
        }
    }
    println!("views  mean error (mm, {seeds} seeds)");
    for (n, s) in counts.iter().zip(sums) {
        println!("{n:>5}  {:.3}", s / seeds as f64);
    }
    Ok(())
}
