use nalgebra::Point3;

/// Closest point on a closed triangle together with its barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePoint {
    pub point: Point3<f64>,
    /// Weights of the three corners; non-negative and summing to one.
    pub barycentric: [f64; 3],
}

/// Closest point on triangle `abc` to `p`, by Voronoi-region decomposition.
///
/// Degenerate triangles fall through to the edge regions, so the result is
/// always a point of the closed triangle.
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> TrianglePoint {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return corner(*a, 0);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return corner(*b, 1);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return TrianglePoint {
            point: a + ab * v,
            barycentric: [1.0 - v, v, 0.0],
        };
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return corner(*c, 2);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return TrianglePoint {
            point: a + ac * w,
            barycentric: [1.0 - w, 0.0, w],
        };
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return TrianglePoint {
            point: b + (c - b) * w,
            barycentric: [0.0, 1.0 - w, w],
        };
    }

    let denom = va + vb + vc;
    if denom.abs() <= f64::MIN_POSITIVE {
        // Zero-area triangle whose edge tests were all inconclusive: pick the nearest edge.
        return nearest_edge(p, a, b, c);
    }
    let v = vb / denom;
    let w = vc / denom;
    TrianglePoint {
        point: a + ab * v + ac * w,
        barycentric: [1.0 - v - w, v, w],
    }
}

fn corner(point: Point3<f64>, i: usize) -> TrianglePoint {
    let mut barycentric = [0.0; 3];
    barycentric[i] = 1.0;
    TrianglePoint { point, barycentric }
}

fn nearest_edge(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> TrianglePoint {
    let on_segment = |s: &Point3<f64>, e: &Point3<f64>| {
        let d = e - s;
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 {
            ((p - s).dot(&d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (s + d * t, t)
    };
    let candidates = [
        (on_segment(a, b), [0, 1]),
        (on_segment(b, c), [1, 2]),
        (on_segment(a, c), [0, 2]),
    ];
    let ((point, t), [i, j]) = candidates
        .into_iter()
        .min_by(|x, y| {
            let dx = (x.0 .0 - p).norm_squared();
            let dy = (y.0 .0 - p).norm_squared();
            dx.total_cmp(&dy)
        })
        .expect("three candidates");
    let mut barycentric = [0.0; 3];
    barycentric[i] = 1.0 - t;
    barycentric[j] = t;
    TrianglePoint { point, barycentric }
}
