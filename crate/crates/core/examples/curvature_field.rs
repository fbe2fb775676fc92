//! Mean curvature of a sphere and a cylinder, plus the binary sidecar.
//!
//! cargo run --example curvature_field [OUT_DIR]

use mvlandmark::curvature::{estimate_curvature_field, CurvatureField, CurvatureStatus};
use mvlandmark::mesh::shapes;

fn summary(name: &str, field: &CurvatureField, expected: f64) {
    let fitted: Vec<f64> = field
        .values
        .iter()
        .zip(&field.status)
        .filter(|(_, s)| **s == CurvatureStatus::Fitted)
        .map(|(v, _)| *v)
        .collect();
    let mean = fitted.iter().sum::<f64>() / fitted.len() as f64;
    println!(
        "{name}: mean {mean:.5} /mm over {} vertices (expected {expected:.5}), {} degenerate",
        fitted.len(),
        field.degenerate_count()
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: std::path::PathBuf = std::env::args().nth(1).map_or_else(std::env::temp_dir, Into::into);
    std::fs::create_dir_all(&out)?;

    let sphere = shapes::icosphere(1000.0, 3);
    let field = estimate_curvature_field(&sphere, 300.0)?;
    summary("sphere r=1000", &field, 1.0 / 1000.0);

    // open cylinder: mean curvature 1/(2r), boundary rows excluded by the neighbourhood test
    let cylinder = shapes::cylinder(10.0, 60.0, 96, 96);
    let field = estimate_curvature_field(&cylinder, 3.0)?;
    let interior: Vec<f64> = cylinder
        .vertices()
        .iter()
        .zip(&field.values)
        .filter(|(p, _)| p.z.abs() < 25.0)
        .map(|(_, v)| *v)
        .collect();
    println!(
        "cylinder r=10: interior mean {:.5} /mm (expected {:.5})",
        interior.iter().sum::<f64>() / interior.len() as f64,
        0.05
    );

    let path = out.join("cylinder.crv");
    field.save_sidecar(&path)?;
    let back = CurvatureField::load_sidecar(&path)?;
    println!("sidecar {} holds {} values", path.display(), back.len());
    Ok(())
}
