//! Thin singular value decomposition by one-sided Jacobi rotations.

use super::matrix::{dot, Matrix};

const MAX_SWEEPS: usize = 80;

/// `a = u * diag(sigma) * vᵀ` for a matrix with at least as many rows as
/// columns.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// rows × cols; columns belonging to zero singular values are zero.
    pub u: Matrix,
    /// Descending.
    pub sigma: Vec<f64>,
    /// cols × cols, orthogonal.
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi: rotates column pairs of `a` until all
/// columns are mutually orthogonal. The rotations accumulate into `v`; the
/// column norms are the singular values.
///
/// Panics if `a` has more columns than rows.
pub fn thin_svd(a: &Matrix) -> ThinSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "thin_svd needs rows >= cols, got {m}x{n}");

    // Work on columns as contiguous vectors.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let scale = a.frobenius_norm();
    let tiny = (f64::EPSILON * scale).powi(2) * 1e-4;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha <= tiny || beta <= tiny {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let cutoff = f64::EPSILON * scale * 1e-2;
    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > cutoff {
            for i in 0..m {
                u[(i, k)] = cols[j][i] / s;
            }
        }
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    ThinSvd { u, sigma, v: vm }
}

fn rotate(vs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = vs.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &ThinSvd) -> Matrix {
        let n = svd.sigma.len();
        let mut us = svd.u.clone();
        for i in 0..us.rows() {
            for k in 0..n {
                us[(i, k)] *= svd.sigma[k];
            }
        }
        us.matmul(&svd.v.transpose())
    }

    #[test]
    fn diagonal_matrix() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [3.0, 0.0], [0.0, 0.0]]);
        let svd = thin_svd(&a);
        assert_eq!(svd.sigma.len(), 2);
        assert!((svd.sigma[0] - 3.0).abs() < 1e-15);
        assert!((svd.sigma[1] - 2.0).abs() < 1e-15);
        assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn random_matrix_reconstructs_and_v_is_orthogonal() {
        let mut rng = crate::numerics::rng::SeededRng::new(11);
        let a = Matrix::from_fn(9, 5, |_, _| rng.normal());
        let svd = thin_svd(&a);
        assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-12);
        let vtv = svd.v.transpose().matmul(&svd.v);
        assert!(vtv.max_abs_diff(&Matrix::identity(5)) < 1e-13);
        let utu = svd.u.transpose().matmul(&svd.u);
        assert!(utu.max_abs_diff(&Matrix::identity(5)) < 1e-13);
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_has_zero_singular_values() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]);
        let svd = thin_svd(&a);
        assert!(svd.sigma[1] < 1e-12 && svd.sigma[2] < 1e-12);
        assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-12);
    }
}
