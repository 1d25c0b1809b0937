//! Hermitian metrics in a frame: fundamental form, Chern torsion, and
//! Hermitian-symplectic (HS) compatibility.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{StructureConstants, Tensor3};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::exterior::{Differential, InvariantForm};
use crate::linalg::{self, c, CMat, CVec, I};
use crate::Check;

/// Hermitian positive definite matrix `g_{ij̄} = ⟨e_i, ē_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetric {
    g: CMat,
}

impl FrameMetric {
    pub fn new(g: CMat) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::Dimension("frame metric must be square".into()));
        }
        let scale = linalg::max_abs(&g).max(1.0);
        if linalg::max_abs(&(&g - g.adjoint())) > 1e-12 * scale {
            return Err(Error::Validation { field: "g".into(), message: "not Hermitian".into() });
        }
        let g = (&g + g.adjoint()) * c(0.5, 0.0);
        let (vals, _) = linalg::hermitian_eigen(&g);
        if vals.first().is_none_or(|&v| v <= 1e-14 * scale) {
            return Err(Error::Validation { field: "g".into(), message: "not positive definite".into() });
        }
        Ok(Self { g })
    }

    pub fn identity(n: usize) -> Self {
        Self { g: CMat::identity(n, n) }
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.g
    }

    /// Metric in the frame `ẽ_i = Σ_j (A^{-1})_{ij} e_j`: `A^{-1} g A^{-*}`.
    pub fn change_frame(&self, a: &CMat, cfg: &Config) -> Result<FrameMetric> {
        let ainv = linalg::inverse(a, cfg.tol_rank)?;
        Self::new(&ainv * &self.g * ainv.adjoint())
    }

    /// `ω = i Σ g_{jk̄} φ_j ∧ φ̄_k`.
    pub fn kahler_form(&self) -> InvariantForm {
        let n = self.n();
        let mut w = InvariantForm::zero(n);
        for j in 0..n {
            for k in 0..n {
                w.add_term((1u64 << j) | (1u64 << (n + k)), I * self.g[(j, k)]);
            }
        }
        w
    }
}

/// Chern torsion `T^j_{ik}`, with `T(e_i, e_k) = Σ_j T^j_{ik} e_j`.
pub fn chern_torsion(sc: &StructureConstants, g: &FrameMetric, cfg: &Config) -> Result<Tensor3> {
    let n = sc.n();
    if g.n() != n {
        return Err(Error::Dimension(format!("metric is {}x{} but n = {n}", g.n(), g.n())));
    }
    let gm = g.matrix();
    let ginv = linalg::inverse(gm, cfg.tol_rank)?;
    // N[j][i][k] = Σ_{α,β} g_{iᾱ} (g^{-1})_{βj} D^β_{αk}
    let nt = sc.d_tensor().transform(&ginv.transpose(), gm, &CMat::identity(n, n));
    Ok(Tensor3::from_fn(n, |j, i, k| -sc.c(j, i, k) - nt.get(j, i, k) + nt.get(j, k, i)))
}

/// Residual norms of a Hermitian metric against the Kähler, pluriclosed and balanced conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricChecks {
    pub kahler: Check,
    pub pluriclosed: Check,
    pub balanced: Check,
}

pub fn metric_checks(sc: &StructureConstants, g: &FrameMetric, cfg: &Config) -> MetricChecks {
    let n = sc.n();
    let d = Differential::new(sc);
    let w = g.kahler_form();
    let dw = d.apply(&w);
    let delbar = dw.type_component(1, 2);
    let ddbar = d.apply(&delbar).type_component(2, 2);
    let balanced = if n <= 1 {
        0.0
    } else {
        let fact: f64 = (1..n).map(|k| k as f64).product();
        d.apply(&w.wedge_power(n - 1)).sup_norm() / fact
    };
    MetricChecks {
        kahler: Check::new(dw.sup_norm(), cfg.tol_alg),
        pluriclosed: Check::new(ddbar.sup_norm(), cfg.tol_alg),
        balanced: Check::new(balanced, cfg.tol_alg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsSolution {
    /// Antisymmetric `S` with `α = Σ_{i<k} 2 S_{ik} φ_i ∧ φ_k`.
    pub s: CMat,
    pub residual: f64,
    pub rhs_norm: f64,
    pub feasible: bool,
}

impl HsSolution {
    pub fn two_form(&self) -> InvariantForm {
        hs_two_form(&self.s)
    }
}

/// `α = Σ_{i<k} 2 S_{ik} φ_i ∧ φ_k`.
pub fn hs_two_form(s: &CMat) -> InvariantForm {
    let n = s.nrows();
    let mut a = InvariantForm::zero(n);
    for i in 0..n {
        for k in (i + 1)..n {
            a.add_term((1u64 << i) | (1u64 << k), s[(i, k)] * 2.0);
        }
    }
    a
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    // position of (a, b), a < b, in row-major upper-triangular order
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

fn add_s(row: &mut [Complex64], n: usize, a: usize, b: usize, coef: Complex64) {
    match a.cmp(&b) {
        std::cmp::Ordering::Less => row[pair_index(n, a, b)] += coef,
        std::cmp::Ordering::Greater => row[pair_index(n, b, a)] -= coef,
        std::cmp::Ordering::Equal => {}
    }
}

/// Assembles the complex-linear system in the `S_{ab}` (a < b) for `dΩ = 0`
/// with `Ω = α + ω + ᾱ`.
fn hs_system(sc: &StructureConstants, g: &FrameMetric, cfg: &Config) -> Result<(CMat, CVec)> {
    let n = sc.n();
    let unknowns = n * (n - 1) / 2;
    let t = chern_torsion(sc, g, cfg)?;
    let gm = g.matrix();
    let mut rows: Vec<Vec<Complex64>> = vec![];
    let mut rhs: Vec<Complex64> = vec![];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut row = vec![Complex64::new(0.0, 0.0); unknowns];
                for r in 0..n {
                    add_s(&mut row, n, r, i, sc.c(r, j, k));
                    add_s(&mut row, n, r, j, sc.c(r, k, i));
                    add_s(&mut row, n, r, k, sc.c(r, i, j));
                }
                rows.push(row);
                rhs.push(Complex64::new(0.0, 0.0));

                let mut row = vec![Complex64::new(0.0, 0.0); unknowns];
                let mut b = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    add_s(&mut row, n, r, k, sc.d(i, r, j).conj());
                    add_s(&mut row, n, r, i, -sc.d(k, r, j).conj());
                    b += t.get(r, i, k) * gm[(r, j)];
                }
                rows.push(row);
                rhs.push(b * c(0.0, -0.5));
            }
        }
    }
    let a = CMat::from_fn(rows.len(), unknowns, |r, col| rows[r][col]);
    Ok((a, CVec::from_vec(rhs)))
}

/// Minimum-norm least-squares solve of the HS system; feasible iff the
/// residual is at most `tol_feas · max(‖b‖, 1)`.
pub fn hs_compatibility(sc: &StructureConstants, g: &FrameMetric, cfg: &Config) -> Result<HsSolution> {
    let n = sc.n();
    let (a, b) = hs_system(sc, g, cfg)?;
    let rhs_norm = b.norm();
    let (x, residual) = if n < 2 { (CVec::zeros(0), rhs_norm) } else { linalg::lstsq(&a, &b, cfg.tol_rank) };
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        for k in (i + 1)..n {
            let v = x[pair_index(n, i, k)];
            s[(i, k)] = v;
            s[(k, i)] = -v;
        }
    }
    Ok(HsSolution { s, residual, rhs_norm, feasible: residual <= cfg.tol_feas * rhs_norm.max(1.0) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsSearchResult {
    pub found: bool,
    /// HS residual in a unitary frame of the best metric, divided by the size of the constants there.
    pub best_residual: f64,
    pub best_g: FrameMetric,
    pub evaluations: usize,
}

const SEARCH_EVALS_PER_RESTART: usize = 500;
/// Bound on every search parameter, keeping `g` away from degenerate metrics.
const SEARCH_BOX: f64 = 2.0;

/// `g = L L^*` from `n` log-diagonal entries followed by real/imaginary parts
/// of the strictly lower entries.
fn lower_factor(n: usize, params: &[f64]) -> CMat {
    let mut l = CMat::zeros(n, n);
    let mut idx = n;
    for i in 0..n {
        l[(i, i)] = c(params[i].exp(), 0.0);
        for j in 0..i {
            l[(i, j)] = c(params[idx], params[idx + 1]);
            idx += 2;
        }
    }
    l
}

fn search_objective(sc: &StructureConstants, params: &[f64], cfg: &Config) -> f64 {
    let n = sc.n();
    let l = lower_factor(n, params);
    let Ok(unitary) = sc.change_frame(&l, cfg) else { return f64::INFINITY };
    let size = unitary.c_tensor().max_abs().max(unitary.d_tensor().max_abs());
    if size <= 1e-300 {
        return 0.0;
    }
    match hs_compatibility(&unitary, &FrameMetric::identity(n), cfg) {
        Ok(sol) => sol.residual / size,
        Err(_) => f64::INFINITY,
    }
}

/// Gradient-free search over metrics `g = L L^*` for one admitting an HS
/// structure. Restart 0 starts from the given frame's unitary metric.
pub fn hs_metric_search(sc: &StructureConstants, restarts: usize, seed: u64, cfg: &Config) -> HsSearchResult {
    let n = sc.n();
    let dim = n * n;
    let mut best_params = vec![0.0; dim];
    let mut best = search_objective(sc, &best_params, cfg);
    let mut evaluations = 1;
    for restart in 0..restarts.max(1) {
        if best <= cfg.tol_feas {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(restart as u64));
        let mut x: Vec<f64> = if restart == 0 { vec![0.0; dim] } else { (0..dim).map(|_| rng.random_range(-SEARCH_BOX..SEARCH_BOX)).collect() };
        let mut fx = search_objective(sc, &x, cfg);
        evaluations += 1;
        let mut step = 0.5;
        let mut used = 1;
        while used < SEARCH_EVALS_PER_RESTART && step > 1e-10 && fx > cfg.tol_feas {
            let k = rng.random_range(0..dim);
            let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut trial = x.clone();
            trial[k] = (trial[k] + dir * step).clamp(-SEARCH_BOX, SEARCH_BOX);
            let ft = search_objective(sc, &trial, cfg);
            used += 1;
            if ft < fx {
                x = trial;
                fx = ft;
                step *= 1.3;
            } else {
                step *= 0.93;
            }
        }
        evaluations += used;
        if fx < best {
            best = fx;
            best_params = x;
        }
    }
    let l = lower_factor(n, &best_params);
    let g = FrameMetric::new(&l * l.adjoint()).unwrap_or_else(|_| FrameMetric::identity(n));
    HsSearchResult { found: best <= cfg.tol_feas, best_residual: best, best_g: g, evaluations }
}
