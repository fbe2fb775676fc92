//! Samples cameras around a colored sphere and writes every channel as PNG.
//!
//! cargo run --example render_views [OUT_DIR]

use mvlandmark::camera::{sample_cameras, ViewSamplingConfig};
use mvlandmark::curvature::estimate_curvature_field;
use mvlandmark::export::{write_gray16_png, write_rgb8_png};
use mvlandmark::mesh::shapes;
use mvlandmark::render::{render_view, Channel, ChannelSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("mvlandmark_views"), Into::into);
    std::fs::create_dir_all(&out)?;

    let sphere = shapes::icosphere(80.0, 4);
    // color by position so the RGB channel shows orientation
    let colors = sphere
        .vertices()
        .iter()
        .map(|p| [0.5 + p.x / 160.0, 0.5 + p.y / 160.0, 0.5 + p.z / 160.0])
        .collect();
    let mesh = sphere.with_colors(colors)?;
    let curvature = estimate_curvature_field(&mesh, 10.0)?;

    let config = ViewSamplingConfig {
        view_count: 4,
        rng_seed: 7,
        ..Default::default()
    };
    let cameras = sample_cameras(&mesh, &config)?;
    for (i, cam) in cameras.iter().enumerate() {
        let view = render_view(&mesh, cam, &ChannelSet::all(), Some(&curvature))?;
        let (w, h) = (view.width, view.height);
        let rgb = [Channel::Red, Channel::Green, Channel::Blue].map(|c| view.channel(c).unwrap());
        write_rgb8_png(&out.join(format!("view{i}_rgb.png")), w, h, rgb)?;
        for c in [Channel::Geometry, Channel::Depth, Channel::Curvature] {
            write_gray16_png(&out.join(format!("view{i}_{c}.png")), w, h, view.channel(c).unwrap())?;
        }
        let covered = view.zbuffer().iter().filter(|&&z| z < 1.0).count();
        println!(
            "view {i}: near {:.1} far {:.1} mm, {:.3} mm/px, {covered} covered pixels",
            cam.near,
            cam.far,
            cam.pixel_size()
        );
    }
    println!("images in {}", out.display());
    Ok(())
}
