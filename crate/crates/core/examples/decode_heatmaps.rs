//! Gaussian heatmaps round-tripped through the HMP1 format and decoded.
//!
//! cargo run --example decode_heatmaps

use mvlandmark::detector::{decode_heatmaps, HeatmapStack, DEFAULT_THRESHOLD};
use mvlandmark::export::gaussian_heatmap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let targets = [(37.2, 190.8), (128.0, 128.0), (250.9, 3.4), (-10.0, 40.0)];
    let planes = targets
        .iter()
        .map(|&(u, v)| gaussian_heatmap(256, 256, u, v, 5.0))
        .collect();
    let stack = HeatmapStack::new(256, 256, planes)?;

    let mut bytes = Vec::new();
    stack.write_to(&mut bytes)?;
    let stack = HeatmapStack::parse(&bytes)?;
    println!("HMP1 stack: {} planes, {} bytes", stack.len(), bytes.len());

    let detections = decode_heatmaps(&stack, DEFAULT_THRESHOLD, 0);
    for (id, (u, v)) in targets.iter().enumerate() {
        match detections.iter().find(|d| d.landmark_id == id) {
            Some(d) => println!(
                "landmark {id}: true ({u:.1}, {v:.1}) decoded ({:.1}, {:.1}) confidence {:.3}",
                d.u, d.v, d.confidence
            ),
            None => println!("landmark {id}: true ({u:.1}, {v:.1}) outside the image, no detection"),
        }
    }
    Ok(())
}
