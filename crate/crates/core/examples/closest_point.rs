//! Octree closest-point queries against a brute-force scan.
//!
//! cargo run --example closest_point

use mvlandmark::mesh::{closest_point_on_triangle, shapes, Octree};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = shapes::icosphere(50.0, 4);
    let octree = Octree::with_defaults(&mesh)?;
    println!(
        "{} triangles in {} leaves",
        mesh.triangle_count(),
        octree.leaf_count()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for _ in 0..200 {
        let q = Point3::new(
            rng.random_range(-80.0..80.0),
            rng.random_range(-80.0..80.0),
            rng.random_range(-80.0..80.0),
        );
        let (hit, stats) = octree.closest_point_with_stats(&mesh, &q);
        tested += stats.triangles_tested;
        let brute = (0..mesh.triangle_count())
            .map(|t| {
                let [a, b, c] = mesh.triangle_vertices(t);
                (closest_point_on_triangle(&q, &a, &b, &c).point - q).norm()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((hit.distance - brute).abs());
    }
    println!("max |octree - brute force| = {worst:.3e} mm");
    println!("mean triangles tested per query: {:.1}", tested as f64 / 200.0);
    Ok(())
}
