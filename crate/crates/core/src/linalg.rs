//! Small dense symmetric solvers used by ray fusion and curvature fitting.

use nalgebra::{Matrix3, Vector3};

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in ascending order with matching unit
/// eigenvectors as the columns of the second element. The rotation
/// sequence depends only on ratios of entries, so negating the input
/// negates the eigenvalues exactly and leaves the eigenvectors unchanged.
pub fn symmetric_eigen3(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let (values, v) = jacobi3(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = Vector3::new(values[order[0]], values[order[1]], values[order[2]]);
    let vectors = Matrix3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    (sorted, vectors)
}

/// Unsorted Jacobi eigenpairs.
fn jacobi3(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = m.symmetric_part();
    let mut v = Matrix3::identity();
    let scale = a.norm();
    if scale == 0.0 {
        return (Vector3::zeros(), v);
    }
    for _ in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off.sqrt() <= 1e-18 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
            let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut j = Matrix3::identity();
            j[(p, p)] = c;
            j[(q, q)] = c;
            j[(p, q)] = s;
            j[(q, p)] = -s;
            a = j.transpose() * a * j;
            // exact zero keeps later sweeps from chasing rounding noise
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= j;
        }
    }
    (a.diagonal(), v)
}

/// Moore-Penrose pseudo-inverse of a symmetric 3×3 matrix.
///
/// Eigenvalues with magnitude below `rel_tol` times the largest magnitude
/// are treated as zero. Returns the pseudo-inverse and the numerical rank.
/// Terms are accumulated in Jacobi order rather than sorted order, which
/// keeps `pinv(-m) == -pinv(m)` bit for bit.
pub fn pinv_symmetric3(m: &Matrix3<f64>, rel_tol: f64) -> (Matrix3<f64>, usize) {
    let (values, vectors) = jacobi3(m);
    let largest = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut pinv = Matrix3::zeros();
    let mut rank = 0;
    if largest == 0.0 {
        return (pinv, 0);
    }
    for i in 0..3 {
        if values[i].abs() > rel_tol * largest {
            let col = vectors.column(i);
            pinv += col * col.transpose() / values[i];
            rank += 1;
        }
    }
    (pinv, rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym() -> impl Strategy<Value = Matrix3<f64>> {
        proptest::array::uniform6(-50.0..50.0f64).prop_map(|e| {
            Matrix3::new(e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5])
        })
    }

    #[test]
    fn diagonal_input() {
        let (vals, _) = symmetric_eigen3(&Matrix3::from_diagonal(&Vector3::new(3.0, -1.0, 2.0)));
        assert_eq!(vals, Vector3::new(-1.0, 2.0, 3.0));
    }

    #[test]
    fn pinv_of_rank_one() {
        let n = Vector3::new(1.0, 2.0, 2.0) / 3.0;
        let m = n * n.transpose() * 4.0;
        let (p, rank) = pinv_symmetric3(&m, 1e-9);
        assert_eq!(rank, 1);
        assert!((p - n * n.transpose() / 4.0).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn reconstructs_input(m in sym()) {
            let (vals, vecs) = symmetric_eigen3(&m);
            let rebuilt = vecs * Matrix3::from_diagonal(&vals) * vecs.transpose();
            prop_assert!((rebuilt - m).norm() <= 1e-12 * (1.0 + m.norm()));
            prop_assert!((vecs.transpose() * vecs - Matrix3::identity()).norm() < 1e-12);
            prop_assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        }

        #[test]
        fn negation_is_exact(m in sym()) {
            let (p, r) = pinv_symmetric3(&m, 1e-9);
            let (q, s) = pinv_symmetric3(&(-m), 1e-9);
            prop_assert_eq!(r, s);
            prop_assert_eq!(p, -q);
        }

        #[test]
        fn full_rank_pinv_is_inverse(m in sym()) {
            let (p, rank) = pinv_symmetric3(&m, 1e-9);
            if rank == 3 {
                if let Some(inv) = m.try_inverse() {
                    prop_assert!((p - inv).norm() <= 1e-8 * inv.norm().max(1.0));
                }
            }
        }
    }
}
