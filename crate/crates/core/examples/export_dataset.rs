//! Writes a training dataset plus the mesh and landmark files it came from.
//! The output directory can be fed to the CLI, e.g.
//! `mvlandmark place --mesh DIR/sphere.obj --landmarks DIR/landmarks.json --detector heatmaps --heatmaps DIR/dataset --out DIR/placed`.
//!
//! cargo run --example export_dataset [OUT_DIR]

use mvlandmark::camera::ViewSamplingConfig;
use mvlandmark::mesh::{save_obj, shapes};
use mvlandmark::pipeline::{export_dataset, ExportConfig, LandmarkEntry, LandmarkSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("mvlandmark_export"), Into::into);
    std::fs::create_dir_all(&out)?;

    let mesh = shapes::icosphere(100.0, 3);
    let landmarks = LandmarkSet {
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
    save_obj(out.join("sphere.obj"), &mesh)?;
    landmarks.save(out.join("landmarks.json"))?;

    let config = ExportConfig {
        sampling: ViewSamplingConfig {
            view_count: 25,
            rng_seed: 3,
            ..Default::default()
        },
        ..Default::default()
    };
    let dataset = out.join("dataset");
    let meta = export_dataset(&mesh, &landmarks, &config, None, &dataset)?;
    let visible: usize = meta
        .iter()
        .map(|m| m.landmarks.iter().filter(|l| l.visible).count())
        .sum();
    println!(
        "{} views, {visible} visible landmark projections, written to {}",
        meta.len(),
        dataset.display()
    );
    Ok(())
}
