//! Byte-level checks of the on-disk formats.

use std::io::Read;

use mvlandmark::curvature::{estimate_curvature_field, CurvatureField};
use mvlandmark::detector::HeatmapStack;
use mvlandmark::export::{write_gray16_png, write_rgb8_png};
use mvlandmark::mesh::{load_mesh, save_obj, save_ply, shapes};

#[test]
fn obj_and_ply_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let base = shapes::icosphere(37.25, 2);
    let colors = (0..base.vertex_count()).map(|i| [(i % 7) as f64 / 6.0, 0.0, 1.0]).collect();
    let mesh = base.with_colors(colors).unwrap();
    let obj = dir.path().join("m.obj");
    save_obj(&obj, &mesh).unwrap();
    let back = load_mesh(&obj).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());

    let ply = dir.path().join("m.ply");
    save_ply(&ply, &mesh).unwrap();
    let back = load_mesh(&ply).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());
    for (a, b) in back.vertex_colors().unwrap().iter().zip(mesh.vertex_colors().unwrap()) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}

#[test]
fn curvature_sidecar_layout() {
    let mesh = shapes::icosphere(50.0, 1);
    let field = estimate_curvature_field(&mesh, 40.0).unwrap();
    let mut bytes = Vec::new();
    field.write_sidecar(&mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"CRV1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize, mesh.vertex_count());
    assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 40.0);
    assert_eq!(bytes.len(), 16 + 4 * mesh.vertex_count());
    let first = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
    assert_eq!(first, field.values[0] as f32);
    let back = CurvatureField::parse_sidecar(&bytes).unwrap();
    assert_eq!(back.len(), field.len());
}

#[test]
fn heatmap_stack_layout() {
    let stack = HeatmapStack::new(2, 1, vec![vec![1.5, -0.25]]).unwrap();
    let mut bytes = Vec::new();
    stack.write_to(&mut bytes).unwrap();
    let mut expected = b"HMP1".to_vec();
    for n in [1u32, 2, 1] {
        expected.extend(n.to_le_bytes());
    }
    expected.extend(1.5f32.to_le_bytes());
    expected.extend((-0.25f32).to_le_bytes());
    assert_eq!(bytes, expected);
}

fn decode(path: &std::path::Path) -> (png::OutputInfo, Vec<u8>) {
    let mut data = Vec::new();
    std::fs::File::open(path).unwrap().read_to_end(&mut data).unwrap();
    let mut reader = png::Decoder::new(std::io::Cursor::new(data)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info, buf)
}

#[test]
fn png_sample_encoding() {
    let dir = tempfile::tempdir().unwrap();
    let gray = dir.path().join("g.png");
    write_gray16_png(&gray, 3, 1, &[0.0, 0.5, 1.0]).unwrap();
    let (info, buf) = decode(&gray);
    assert_eq!((info.color_type, info.bit_depth), (png::ColorType::Grayscale, png::BitDepth::Sixteen));
    // round(0.5 × 65535) = 32768
    assert_eq!(buf, [0, 0, 0x80, 0x00, 0xff, 0xff]);

    let rgb = dir.path().join("c.png");
    write_rgb8_png(&rgb, 1, 1, [&[1.0], &[0.5], &[0.0]]).unwrap();
    let (info, buf) = decode(&rgb);
    assert_eq!((info.color_type, info.bit_depth), (png::ColorType::Rgb, png::BitDepth::Eight));
    assert_eq!(buf, [255, 128, 0]);
}
