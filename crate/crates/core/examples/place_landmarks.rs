//! End-to-end placement with the noisy oracle detector.
//!
//! cargo run --release --example place_landmarks

use mvlandmark::consensus::RansacConfig;
use mvlandmark::detector::OracleConfig;
use mvlandmark::mesh::shapes;
use mvlandmark::pipeline::{run_pipeline, DetectorSource, LandmarkEntry, LandmarkSet, PipelineConfig};

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
    let config = PipelineConfig {
        detector: DetectorSource::Oracle(OracleConfig {
            noise_sigma: 2.0,
            outlier_rate: 0.2,
            dropout_rate: 0.1,
            rng_seed: 1,
            ..Default::default()
        }),
        ransac: RansacConfig {
            inlier_threshold: 8.0,
            rng_seed: 1,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = run_pipeline(&mesh, Some(&gt), &config)?;
    println!("{} views, {} detections", out.cameras.len(), out.detections.len());
    println!("mm per pixel: {:.3}", out.cameras[0].pixel_size());
    for r in &out.results {
        println!(
            "landmark {:>2}: {:?}, {} inlier views, rms {:.2} mm",
            r.landmark_id,
            r.status,
            r.inlier_views.len(),
            r.rms_residual.unwrap_or(f64::NAN)
        );
    }
    let report = out.report.expect("ground truth given");
    println!(
        "mean error {:.3} mm, {} missing",
        report.overall_mean_mm.unwrap_or(f64::NAN),
        report.missing
    );
    Ok(())
}
