//! Analytic test shapes with outward-facing, counter-clockwise winding.

use std::collections::HashMap;

use nalgebra::Point3;

use super::TriangleMesh;

/// Icosahedron subdivided `subdivisions` times, vertices projected onto a
/// sphere of `radius` centred at the origin.
///
/// Level `k` has `10·4ᵏ + 2` vertices and `20·4ᵏ` triangles. The twelve
/// icosahedron corners keep indices `0..12` at every level.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, vertices: &mut Vec<Point3<f64>>| {
            let key = (i.min(j), i.max(j));
            *cache.entry(key).or_insert_with(|| {
                let m = (vertices[i].coords + vertices[j].coords).normalize();
                vertices.push(Point3::from(m));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere topology is valid")
}

/// Planar grid of `nx × ny` vertices in the z = 0 plane with the given
/// spacing, starting at the origin; normals point to +z.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v = j * nx + i;
            triangles.push([v, v + 1, v + nx + 1]);
            triangles.push([v, v + nx + 1, v + nx]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("grid topology is valid")
}

/// Open cylinder around the z axis, `segments` around and `rings` along,
/// spanning z in `[-height/2, height/2]`.
pub fn cylinder(radius: f64, height: f64, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 1);
    let mut vertices = Vec::with_capacity(segments * (rings + 1));
    for r in 0..=rings {
        let z = -height / 2.0 + height * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = std::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(Point3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    let mut triangles = Vec::with_capacity(2 * segments * rings);
    for r in 0..rings {
        for s in 0..segments {
            let a = r * segments + s;
            let b = r * segments + (s + 1) % segments;
            let c = a + segments;
            let d = b + segments;
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("cylinder topology is valid")
}

/// Axis-aligned cube `[0,1]³` as 12 triangles.
pub fn unit_cube() -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let triangles = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    TriangleMesh::new(vertices, triangles).expect("cube topology is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_outward(mesh: &TriangleMesh, center: Point3<f64>) {
        for t in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle_vertices(t);
            let centroid = Point3::from((a.coords + b.coords + c.coords) / 3.0);
            assert!(mesh.face_normal(t).dot(&(centroid - center)) > 0.0, "triangle {t}");
        }
    }

    #[test]
    fn icosphere_counts_follow_subdivision_formula() {
        for k in 0..4u32 {
            let m = icosphere(1.0, k);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(k) + 2);
            assert_eq!(m.triangle_count(), 20 * 4usize.pow(k));
        }
        let m = icosphere(1000.0, 3);
        assert_eq!((m.vertex_count(), m.triangle_count()), (642, 1280));
        for v in m.vertices() {
            assert!((v.coords.norm() - 1000.0).abs() < 1e-9);
        }
        assert_outward(&m, Point3::origin());
    }

    #[test]
    fn cube_and_cylinder_face_outward() {
        assert_outward(&unit_cube(), Point3::new(0.5, 0.5, 0.5));
        let cyl = cylinder(10.0, 40.0, 32, 8);
        for t in 0..cyl.triangle_count() {
            let [a, b, c] = cyl.triangle_vertices(t);
            let centroid = (a.coords + b.coords + c.coords) / 3.0;
            let radial = nalgebra::Vector3::new(centroid.x, centroid.y, 0.0);
            assert!(cyl.face_normal(t).dot(&radial) > 0.0);
        }
    }

    #[test]
    fn grid_faces_up() {
        let g = grid(4, 3, 2.0);
        assert_eq!((g.vertex_count(), g.triangle_count()), (12, 12));
        for t in 0..g.triangle_count() {
            assert!(g.face_normal(t).z > 0.0);
        }
    }
}
