//! Dense helpers over `nalgebra` used throughout the crate.
//!
//! Every span / rank decision goes through singular values with a cutoff
//! relative to the largest singular value of the matrix at hand.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Absolute floor under which a matrix is treated as zero regardless of its scale.
const ZERO_FLOOR: f64 = 1e-13;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.abs()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Full SVD `(σ descending, U, V)` of a real matrix; `U` and `V` are square.
fn sorted_svd_real(m: &RMat) -> (Vec<f64>, RMat, RMat) {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.svd().expect("SVD converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let k = order.len();
    let sv: Vec<f64> = order.iter().map(|&q| s[q]).collect();
    let col = |q: usize| if q < k { order[q] } else { q };
    let u_sorted = RMat::from_fn(rows, rows, |r, q| u[(r, col(q))]);
    let v_sorted = RMat::from_fn(cols, cols, |r, q| v[(r, col(q))]);
    (sv, u_sorted, v_sorted)
}

/// Thin SVD `(σ descending, U, V)` of a complex matrix.
fn sorted_svd_complex(m: &CMat) -> (Vec<f64>, CMat, CMat) {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<faer::c64>::from_fn(rows, cols, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let svd = fm.thin_svd().expect("SVD converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].re.partial_cmp(&s[a].re).unwrap_or(std::cmp::Ordering::Equal));
    let sv: Vec<f64> = order.iter().map(|&q| s[q].re).collect();
    let k = order.len();
    let u_sorted = CMat::from_fn(rows, k, |r, q| c(u[(r, order[q])].re, u[(r, order[q])].im));
    let v_sorted = CMat::from_fn(cols, k, |r, q| c(v[(r, order[q])].re, v[(r, order[q])].im));
    (sv, u_sorted, v_sorted)
}

fn numerical_rank(sv: &[f64], tol_rel: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= ZERO_FLOOR {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rel * top).count()
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn orth_real(m: &RMat, tol_rel: f64) -> RMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let (sv, u, _) = sorted_svd_real(m);
    let rank = numerical_rank(&sv, tol_rel);
    u.columns(0, rank).into_owned().rows(0, m.nrows()).into_owned()
}

/// Orthonormal basis of the null space of `m` (columns live in the domain of `m`).
pub fn null_real(m: &RMat, tol_rel: f64) -> RMat {
    let cols = m.ncols();
    if cols == 0 {
        return RMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return RMat::identity(cols, cols);
    }
    let (sv, _, v) = sorted_svd_real(m);
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top <= ZERO_FLOOR {
        0
    } else {
        sv.iter().filter(|&&s| s > tol_rel.max(ZERO_FLOOR / top) * top).count()
    };
    v.columns(rank, cols - rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside ℝ^dim.
pub fn complement_real(q: &RMat, dim: usize, tol_rel: f64) -> RMat {
    if q.ncols() == 0 {
        return RMat::identity(dim, dim);
    }
    null_real(&q.transpose(), tol_rel)
}

/// Orthonormal basis of span(q1) ∩ span(q2) for orthonormal inputs.
///
/// Directions of span(q2) whose distance to span(q1) (the sine of the
/// principal angle) is below `angle_tol` are kept.
pub fn intersect_real(q1: &RMat, q2: &RMat, angle_tol: f64) -> RMat {
    let dim = q1.nrows();
    if q1.ncols() == 0 || q2.ncols() == 0 {
        return RMat::zeros(dim, 0);
    }
    let proj = q1 * q1.transpose();
    let resid = (RMat::identity(dim, dim) - proj) * q2;
    // singular values of `resid` are the sines of the principal angles
    let (sv, _, v) = sorted_svd_real(&resid);
    let k = q2.ncols();
    let keep: Vec<usize> = (0..k).filter(|&j| sv.get(j).copied().unwrap_or(0.0) < angle_tol).collect();
    let dirs = RMat::from_fn(k, keep.len(), |r, c| v[(r, keep[c])]);
    orth_real(&(q2 * dirs), 1e-8)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// Singular values (descending) of a complex matrix.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    sorted_svd_complex(m).0
}

/// Inverse of a square complex matrix, refusing numerically singular input.
pub fn inverse(m: &CMat, tol_rel: f64) -> Result<CMat> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("expected square matrix, got {}x{}", n, m.ncols())));
    }
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let sv = singular_values(m);
    let top = sv[0];
    let bottom = *sv.last().unwrap();
    if top <= ZERO_FLOOR || bottom <= tol_rel * top {
        return Err(Error::Rank(format!(
            "matrix is singular (smallest/largest singular value {bottom:.3e}/{top:.3e})"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Rank("LU inversion failed".into()))
}

/// Minimum-norm least-squares solution of `a x = b` and the residual 2-norm.
///
/// Singular values below `tol_rel · σ_max` are dropped.
pub fn lstsq(a: &CMat, b: &CVec, tol_rel: f64) -> (CVec, f64) {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return (CVec::zeros(cols), b.norm());
    }
    let (sv, u, v) = sorted_svd_complex(a);
    let mut x = CVec::zeros(cols);
    let top = sv[0];
    if top > ZERO_FLOOR {
        for (k, &s) in sv.iter().enumerate() {
            if s > tol_rel * top {
                let coef = u.column(k).dotc(b) / s;
                x += v.column(k) * coef;
            }
        }
    }
    let resid = (a * &x - b).norm();
    (x, resid)
}

/// Projection residual of `v` onto the column space of `m`.
pub fn column_space_residual(m: &CMat, v: &CVec, tol_rel: f64) -> f64 {
    lstsq(m, v, tol_rel).1
}

/// Block-diagonal embedding of `block` into the top-left corner of an identity.
pub fn embed_top_left(block: &CMat, n: usize) -> CMat {
    let mut a = CMat::identity(n, n);
    let r = block.nrows();
    a.view_mut((0, 0), (r, r)).copy_from(block);
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersection_of_planes_in_r3_is_a_line() {
        let q1 = orth_real(&RMat::from_row_slice(3, 2, &[1., 0., 0., 1., 0., 0.]), 1e-10);
        let q2 = orth_real(&RMat::from_row_slice(3, 2, &[0., 0., 1., 0., 0., 1.]), 1e-10);
        let x = intersect_real(&q1, &q2, 1e-8);
        assert_eq!(x.ncols(), 1);
        assert!((x[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_dimension() {
        let q = orth_real(&RMat::from_row_slice(4, 1, &[1., 1., 0., 0.]), 1e-10);
        let w = complement_real(&q, 4, 1e-10);
        assert_eq!(w.ncols(), 3);
        assert!((q.transpose() * &w).norm() < 1e-12);
    }

    #[test]
    fn lstsq_minimum_norm() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1)
        let a = CMat::from_row_slice(1, 2, &[c(1., 0.), c(1., 0.)]);
        let b = CVec::from_vec(vec![c(2., 0.)]);
        let (x, r) = lstsq(&a, &b, 1e-12);
        assert!(r < 1e-12);
        assert!((x[0] - c(1., 0.)).norm() < 1e-12 && (x[1] - c(1., 0.)).norm() < 1e-12);
    }

    #[test]
    fn singular_inverse_is_rank_error() {
        let m = CMat::from_row_slice(2, 2, &[c(1., 0.), c(2., 0.), c(2., 0.), c(4., 0.)]);
        assert!(matches!(inverse(&m, 1e-8), Err(Error::Rank(_))));
    }

    #[test]
    fn hermitian_eigen_sorted() {
        let h = CMat::from_row_slice(2, 2, &[c(2., 0.), c(0., 1.), c(0., -1.), c(2., 0.)]);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let back = &vecs * CMat::from_diagonal(&CVec::from_vec(vals.iter().map(|&v| c(v, 0.)).collect())) * vecs.adjoint();
        assert!((back - h).norm() < 1e-12);
    }

    #[test]
    fn lstsq_on_nearly_diagonal_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for t in 0..2000 {
            let n = rng.random_range(1..7);
            let eps = [1.0, 1e-8, 1e-15, 0.0][t % 4];
            let m = CMat::from_fn(n, n, |i, j| {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if i == j { z } else { z * eps }
            });
            let b = CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let sv = singular_values(&m);
            let (x, resid) = lstsq(&m, &b, 1e-12);
            if sv[n - 1] > 1e-6 {
                assert!(resid < 1e-9, "t = {t}: {resid}");
            }
            assert!((&m * &x - &b).norm() - resid < 1e-12);
        }
    }
}