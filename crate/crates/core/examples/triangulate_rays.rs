//! Least-squares ray intersection and RANSAC on a synthetic ray bundle.
//!
//! cargo run --example triangulate_rays

use mvlandmark::consensus::{lsq_point_from_rays, ransac_consensus, LandmarkRay, RansacConfig};
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if (0.1..=1.0).contains(&v.norm()) {
            return v.normalize();
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = Point3::new(12.0, -4.0, 30.0);
    let decoy = truth + random_unit(&mut rng) * 100.0;

    // 70 rays near the true point, 30 through a decoy 100 mm away
    let rays: Vec<LandmarkRay> = (0..100)
        .map(|i| {
            let target = if i < 70 {
                truth + random_unit(&mut rng) * rng.random_range(0.0..0.5)
            } else {
                decoy
            };
            let n = random_unit(&mut rng);
            let mut ray = LandmarkRay::new(target - n * 150.0, n).unwrap();
            ray.view_id = i;
            ray
        })
        .collect();

    let (naive, _) = lsq_point_from_rays(&rays)?;
    println!("plain least squares error: {:.2} mm", (naive - truth).norm());

    let out = ransac_consensus(&rays, &RansacConfig::default())?;
    let outliers_kept = out.inliers.iter().filter(|r| r.view_id >= 70).count();
    println!(
        "RANSAC error: {:.3} mm with {} inliers ({outliers_kept} outliers), rms {:.3} mm",
        (out.point - truth).norm(),
        out.inliers.len(),
        out.rms_residual
    );
    Ok(())
}
