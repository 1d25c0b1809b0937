//! Admissible frames of 2-step solvable Hermitian algebras, the block data
//! `C_x, D_x, Z_x, v^y_x, w_{xy}, u_x, S'`, and the identities they satisfy.
//!
//! Index ranges (0-based): `i ∈ [0, r)` for 𝔤'_J, `α ∈ [r, s)` for V,
//! `a ∈ [s, n)` for W, and `x ∈ [r, n)` for everything outside 𝔤'_J.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{bracket_span, complexify_and_extract, solvable_profile, Frame, HermitianAlgebra, StructureConstants};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, RMat, I};
use crate::metrics::FrameMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PureType {
    I,
    II,
    III,
    #[serde(rename = "mixed")]
    Mixed,
}

impl std::fmt::Display for PureType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PureType::I => "I",
            PureType::II => "II",
            PureType::III => "III",
            PureType::Mixed => "mixed",
        })
    }
}

/// Block sizes of an admissible frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub r: usize,
    pub s: usize,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct AdmissibleDecomposition {
    pub shape: BlockShape,
    pub frame: Frame,
    pub g_mid: CMat,
    /// Full frame metric, block diagonal `(I_r, g_mid, I_{n−s})`.
    pub metric: FrameMetric,
    pub pure_type: PureType,
    /// Real dimension of 𝔤'.
    pub derived_dim: usize,
    pub constants: StructureConstants,
}

/// Greedy pivoted Gram–Schmidt over candidate vectors: repeatedly takes the
/// candidate with the largest residual (ties to the lowest index).
fn pivoted_gram_schmidt(candidates: &[CVec], count: usize) -> Vec<CVec> {
    let mut basis: Vec<CVec> = vec![];
    let mut resid: Vec<CVec> = candidates.to_vec();
    while basis.len() < count {
        let norms: Vec<f64> = resid.iter().map(|v| v.norm()).collect();
        let best = norms.iter().cloned().fold(0.0, f64::max);
        if best <= 1e-10 {
            break;
        }
        let k = norms.iter().position(|&v| v >= best * (1.0 - 1e-9)).unwrap();
        let q = &resid[k] / c(norms[k], 0.0);
        for v in resid.iter_mut() {
            let dot = q.dotc(v);
            *v -= &q * dot;
        }
        basis.push(q);
    }
    basis
}

/// Hermitian-orthonormal (1,0)-vectors `(x − iJx)/√2` spanning the complexification of
/// the J-invariant subspace with orthonormal real basis `q`, chosen by projecting
/// the reference vectors `y_k − iJy_k` of the coordinate basis.
fn unitary_block(q: &RMat, j: &RMat) -> Result<Vec<CVec>> {
    let k = q.ncols();
    if !k.is_multiple_of(2) {
        return Err(Error::Structure(format!("J-invariant subspace has odd real dimension {k}")));
    }
    let d = q.nrows();
    let proj = linalg::to_complex(&(q * q.transpose()));
    let jc = linalg::to_complex(j);
    let candidates: Vec<CVec> = (0..d)
        .map(|m| {
            let y = CVec::from_fn(d, |r, _| if r == m { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let t = &y - (&jc * &y) * I;
            &proj * t / c(std::f64::consts::SQRT_2, 0.0)
        })
        .collect();
    let basis = pivoted_gram_schmidt(&candidates, k / 2);
    if basis.len() != k / 2 {
        return Err(Error::Structure("subspace is not J-invariant".into()));
    }
    Ok(basis)
}

/// Real orthonormal basis of span(q) chosen by projecting coordinate vectors.
fn real_block(q: &RMat) -> Vec<RMat> {
    let d = q.nrows();
    let proj = linalg::to_complex(&(q * q.transpose()));
    let candidates: Vec<CVec> = (0..d)
        .map(|m| proj.column(m).into_owned())
        .collect();
    pivoted_gram_schmidt(&candidates, q.ncols())
        .into_iter()
        .map(|v| RMat::from_fn(d, 1, |r, _| v[r].re))
        .collect()
}

/// Decomposes 𝔤 = 𝔤'_J ⊕ (V ⊕ JV) ⊕ W and returns an admissible frame with the
/// structure constants in it.
pub fn build_admissible_frame(h: &HermitianAlgebra, cfg: &Config) -> Result<AdmissibleDecomposition> {
    let profile = solvable_profile(&h.alg, cfg);
    if !profile.is_2step_solvable {
        return Err(Error::Precondition(format!(
            "algebra is not 2-step solvable (derived series dims {:?})",
            profile.derived_series_dims
        )));
    }
    let d = h.alg.dim();
    let n = d / 2;
    let oc = h.orthonormal_coords();
    let l_t = h.metric.lower_factor().transpose();
    let l_t_inv = l_t.clone().try_inverse().expect("cholesky factor is invertible");

    // 𝔤' in x-coordinates, then moved to orthonormal y-coordinates
    let derived_x = bracket_span(&h.alg, &RMat::identity(d, d), cfg.tol_rank);
    let gp = linalg::orth_real(&(&l_t * &derived_x), cfg.tol_rank);
    let jgp = &oc.j * &gp;
    let gpj = linalg::intersect_real(&gp, &jgp, 1e-8);
    let dim_gp = gp.ncols();
    let dim_gpj = gpj.ncols();
    if !dim_gpj.is_multiple_of(2) {
        return Err(Error::Structure(format!("J𝔤' ∩ 𝔤' has odd real dimension {dim_gpj}")));
    }
    let sum = linalg::orth_real(&RMat::from_fn(d, 2 * dim_gp, |r, k| if k < dim_gp { gp[(r, k)] } else { jgp[(r, k - dim_gp)] }), cfg.tol_rank);
    let w = linalg::complement_real(&sum, d, cfg.tol_rank);
    if !w.ncols().is_multiple_of(2) {
        return Err(Error::Structure(format!("W has odd real dimension {}", w.ncols())));
    }
    // V = (𝔤'_J)^⊥ ∩ 𝔤'
    let v_space = if dim_gpj == 0 {
        gp.clone()
    } else {
        let p = RMat::identity(d, d) - &gpj * gpj.transpose();
        let m = &p * &gp;
        if linalg::max_abs_real(&m) <= 1e-12 {
            RMat::zeros(d, 0)
        } else {
            linalg::orth_real(&m, cfg.tol_rank)
        }
    };
    let r = dim_gpj / 2;
    let s = r + v_space.ncols();
    let nw = w.ncols() / 2;
    if s + nw != n {
        return Err(Error::Structure(format!(
            "block sizes do not add up: r = {r}, dim V = {}, dim W/2 = {nw}, n = {n}",
            s - r
        )));
    }

    let to_x = linalg::to_complex(&l_t_inv);
    let mut cols: Vec<CVec> = vec![];
    for e in unitary_block(&gpj, &oc.j)? {
        cols.push(&to_x * e);
    }
    let jc = linalg::to_complex(&oc.j);
    for v in real_block(&v_space) {
        let vc = linalg::to_complex(&v).column(0).into_owned();
        let e = (&vc - (&jc * &vc) * I) / c(2.0, 0.0);
        cols.push(&to_x * e);
    }
    for e in unitary_block(&w, &oc.j)? {
        cols.push(&to_x * e);
    }
    let frame = Frame::new(CMat::from_columns(&cols), &h.j, cfg)?;
    let gram = frame.gram(&h.metric);
    let g_mid = gram.view((r, r), (s - r, s - r)).into_owned();
    let metric = FrameMetric::new(gram)?;
    let constants = complexify_and_extract(&h.alg, &h.j, &frame, cfg)?;

    let pure_type = if dim_gpj == 0 {
        PureType::I
    } else if dim_gpj == dim_gp {
        PureType::II
    } else if sum.ncols() == d {
        PureType::III
    } else {
        PureType::Mixed
    };
    Ok(AdmissibleDecomposition { shape: BlockShape { r, s, n }, frame, g_mid, metric, pure_type, derived_dim: dim_gp, constants })
}

/// Block slices of the structure constants in an admissible frame.
#[derive(Debug, Clone)]
pub struct BlockData {
    pub shape: BlockShape,
    /// `C_x[i][j] = C^j_{ix}`, indexed by `x − r`.
    pub c: Vec<CMat>,
    /// `D_x[i][j] = D^j_{ix}`, indexed by `x − r`.
    pub d: Vec<CMat>,
    /// `Z_x[i][j] = D^x_{ij}`, indexed by `x − r`; the `Z_a` are those with `a ≥ s`.
    pub z: Vec<CMat>,
    /// `v[y][x]_i = D^y_{ix}`, both indexed relative to `r`.
    pub v: Vec<Vec<CVec>>,
    /// `w[x][y]_i = C^i_{xy}`.
    pub w: Vec<Vec<CVec>>,
    /// `u[x]_i = S_{ix}` when an HS solution is attached.
    pub u: Option<Vec<CVec>>,
    pub s_prime: Option<CMat>,
}

pub fn extract_blocks(shape: BlockShape, sc: &StructureConstants, s: Option<&CMat>) -> Result<BlockData> {
    let BlockShape { r, s: sv, n } = shape;
    if r > sv || sv > n || sc.n() != n {
        return Err(Error::Dimension(format!("block shape r = {r}, s = {sv}, n = {n} does not fit constants with n = {}", sc.n())));
    }
    if let Some(s) = s {
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Dimension(format!("S must be {n}x{n}")));
        }
    }
    let xs: Vec<usize> = (r..n).collect();
    let c_blocks = xs.iter().map(|&x| CMat::from_fn(r, r, |i, j| sc.c(j, i, x))).collect();
    let d_blocks = xs.iter().map(|&x| CMat::from_fn(r, r, |i, j| sc.d(j, i, x))).collect();
    let z_blocks = xs.iter().map(|&x| CMat::from_fn(r, r, |i, j| sc.d(x, i, j))).collect();
    let v = xs.iter().map(|&y| xs.iter().map(|&x| CVec::from_fn(r, |i, _| sc.d(y, i, x))).collect()).collect();
    let w = xs.iter().map(|&x| xs.iter().map(|&y| CVec::from_fn(r, |i, _| sc.c(i, x, y))).collect()).collect();
    let u = s.map(|s| xs.iter().map(|&x| CVec::from_fn(r, |i, _| s[(i, x)])).collect());
    let s_prime = s.map(|s| s.view((0, 0), (r, r)).into_owned());
    Ok(BlockData { shape, c: c_blocks, d: d_blocks, z: z_blocks, v, w, u, s_prime })
}

/// One named residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub id: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTable {
    pub checks: Vec<NamedCheck>,
}

impl CheckTable {
    fn new() -> Self {
        Self { checks: vec![] }
    }

    fn push(&mut self, id: &str, residual: f64, tol: f64) {
        self.checks.push(NamedCheck { id: id.to_string(), residual, pass: residual <= tol });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn get(&self, id: &str) -> Option<&NamedCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub restriction1: CheckTable,
    /// `D^*_{α*} = 0`; a necessary condition for a compact HS quotient.
    pub restriction2: NamedCheck,
}

impl RestrictionReport {
    pub fn pass(&self) -> bool {
        self.restriction1.pass() && self.restriction2.pass
    }
}

fn max_over(ranges: [std::ops::Range<usize>; 3], f: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for a in ranges[0].clone() {
        for b in ranges[1].clone() {
            for cc in ranges[2].clone() {
                worst = worst.max(f(a, b, cc));
            }
        }
    }
    worst
}

/// Vanishing and relation checks that hold in every admissible frame of a
/// 2-step solvable algebra, plus the condition `D^*_{α*} = 0`.
pub fn verify_restrictions(shape: BlockShape, sc: &StructureConstants, cfg: &Config) -> RestrictionReport {
    let BlockShape { r, s, n } = shape;
    let tol = cfg.tol_alg;
    let (ii, aa, ww, xx, all) = (0..r, r..s, s..n, r..n, 0..n);
    let mut t = CheckTable::new();
    t.push("C^*_{ij}", max_over([all.clone(), ii.clone(), ii.clone()], |m, i, j| sc.c(m, i, j).norm()), tol);
    t.push("C^x_{**}", max_over([xx.clone(), all.clone(), all.clone()], |m, p, q| sc.c(m, p, q).norm()), tol);
    t.push("D^*_{a*}", max_over([all.clone(), ww.clone(), all.clone()], |m, a, q| sc.d(m, a, q).norm()), tol);
    t.push("D^i_{*j}", max_over([ii.clone(), all.clone(), ii.clone()], |i, p, j| sc.d(i, p, j).norm()), tol);
    t.push("D^α_{*j}", max_over([aa.clone(), all.clone(), ii.clone()], |al, p, j| sc.d(al, p, j).norm()), tol);
    t.push("D^i_{αβ}", max_over([ii.clone(), aa.clone(), aa.clone()], |i, al, be| sc.d(i, al, be).norm()), tol);
    t.push(
        "C_α = −D_α^*",
        max_over([ii.clone(), ii.clone(), aa.clone()], |i, j, al| (sc.c(j, i, al) + sc.d(i, j, al).conj()).norm()),
        tol,
    );
    t.push(
        "w_{αβ} = conj(v^β_α) − conj(v^α_β)",
        max_over([ii.clone(), aa.clone(), aa.clone()], |i, al, be| {
            (sc.c(i, al, be) - sc.d(be, i, al).conj() + sc.d(al, i, be).conj()).norm()
        }),
        tol,
    );
    t.push(
        "conj(D^x_{αy}) = −D^y_{αx}",
        max_over([xx.clone(), aa.clone(), xx.clone()], |x, al, y| (sc.d(x, al, y).conj() + sc.d(y, al, x)).norm()),
        tol,
    );
    let r2 = max_over([all.clone(), aa.clone(), all.clone()], |m, al, q| sc.d(m, al, q).norm());
    RestrictionReport {
        restriction1: t,
        restriction2: NamedCheck { id: "D^*_{α*}".into(), residual: r2, pass: r2 <= tol },
    }
}

fn cnorm(m: &CMat) -> f64 {
    m.norm()
}

fn vnorm(v: &CVec) -> f64 {
    v.norm()
}

fn conj_m(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

fn conj_v(v: &CVec) -> CVec {
    v.map(|z| z.conj())
}

/// Bilinear pairing `Σ a_j b_j`.
fn pair(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// The first Bianchi identities restricted to the blocks (C1–C7).
pub fn verify_bianchi_blocks(bd: &BlockData, cfg: &Config) -> CheckTable {
    let BlockShape { r, s, n } = bd.shape;
    let m = n - r;
    let tol = cfg.tol_alg;
    let ad = |x: &CMat| x.adjoint();
    let (mut c1, mut c2, mut c3, mut c4, mut c5, mut c6, mut c7) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
    for x in 0..m {
        for y in 0..m {
            c1 = c1
                .max(cnorm(&linalg::commutator(&bd.c[x], &bd.c[y])))
                .max(cnorm(&linalg::commutator(&bd.d[x], &bd.d[y])));
            c2 = c2.max(cnorm(&(ad(&bd.c[x]) * &bd.d[y] - &bd.d[y] * ad(&bd.c[x]) + &bd.z[x] * conj_m(&bd.z[y]))));
            if y + r >= s {
                c3 = c3.max(cnorm(&(&bd.d[x] * &bd.z[y] - &bd.z[y] * bd.c[x].transpose())));
            }
            let lhs = ad(&bd.c[x]) * &bd.z[y] - &bd.z[y] * conj_m(&bd.d[x]);
            let rhs = ad(&bd.c[y]) * &bd.z[x] - &bd.z[x] * conj_m(&bd.d[y]);
            c4 = c4.max(cnorm(&(lhs - rhs)));
            for z in 0..m {
                let e5 = bd.c[x].transpose() * &bd.w[y][z] + bd.c[y].transpose() * &bd.w[z][x] + bd.c[z].transpose() * &bd.w[x][y];
                c5 = c5.max(vnorm(&e5));
                let e6 = &bd.d[x] * &bd.v[y][z] - &bd.d[z] * &bd.v[y][x] + &bd.z[y] * &bd.w[x][z];
                c6 = c6.max(vnorm(&e6));
                let e7 = ad(&bd.c[x]) * &bd.v[z][y] - ad(&bd.c[z]) * &bd.v[x][y]
                    + &bd.d[y] * conj_v(&bd.w[x][z])
                    + &bd.z[x] * conj_v(&bd.v[y][z])
                    - &bd.z[z] * conj_v(&bd.v[y][x]);
                c7 = c7.max(vnorm(&e7));
            }
        }
    }
    let mut t = CheckTable::new();
    for (id, v) in [("C1", c1), ("C2", c2), ("C3", c3), ("C4", c4), ("C5", c5), ("C6", c6), ("C7", c7)] {
        t.push(id, v, tol);
    }
    t
}

/// Identities D1–D8 and the summary system for an attached HS solution.
pub fn verify_hs_blocks(bd: &BlockData, cfg: &Config) -> Result<CheckTable> {
    let (Some(u), Some(sp)) = (&bd.u, &bd.s_prime) else {
        return Err(Error::Precondition("no HS solution attached to the block data".into()));
    };
    let BlockShape { r, s, n } = bd.shape;
    let m = n - r;
    let tol = cfg.tol_alg;
    let half_i = c(0.0, 0.5);
    let two_i = c(0.0, 2.0);
    let mut d = [0f64; 8];
    let mut summ = [0f64; 8];
    for x in 0..m {
        let (cx, dx, zx) = (&bd.c[x], &bd.d[x], &bd.z[x]);
        d[3] = d[3].max(cnorm(&(cx + dx + sp * conj_m(zx) * two_i)));
        d[4] = d[4].max(cnorm(&(zx.transpose() - zx - (dx.adjoint() * sp + sp * conj_m(dx)) * two_i)));
        d[5] = d[5].max(cnorm(&(sp * cx.transpose() + cx * sp)));
        summ[1] = summ[1].max(cnorm(&(dx * sp + sp * dx.transpose())));
        summ[2] = summ[2].max(cnorm(&(dx.adjoint() * sp + sp * conj_m(dx))));
        if x + r < s {
            summ[6] = summ[6].max(cnorm(&(dx.adjoint() - dx)));
        }
        for y in 0..m {
            let e2 = sp * conj_v(&bd.v[x][y]) + bd.d[y].adjoint() * &u[x] - &bd.v[y][x] * half_i;
            d[1] = d[1].max(vnorm(&e2));
            let e3 = conj_m(zx).transpose() * &u[y] - conj_m(&bd.z[y]).transpose() * &u[x] - &bd.w[x][y] * half_i;
            d[2] = d[2].max(vnorm(&e3));
            let e7 = cx * &u[y] - &bd.c[y] * &u[x] - sp * &bd.w[x][y];
            d[6] = d[6].max(vnorm(&e7));
            summ[5] = summ[5].max(vnorm(&(dx * &u[y] - &bd.d[y] * &u[x])));
            if x + r < s && y + r < s {
                summ[7] = summ[7].max(vnorm(&(&bd.v[x][y] - &bd.v[y][x])));
            }
            for z in 0..m {
                let e1 = pair(&u[x], &conj_v(&bd.v[z][y])) - pair(&u[z], &conj_v(&bd.v[x][y]));
                d[0] = d[0].max(e1.norm());
                let e8 = pair(&u[x], &bd.w[y][z]) + pair(&u[y], &bd.w[z][x]) + pair(&u[z], &bd.w[x][y]);
                d[7] = d[7].max(e8.norm());
                summ[3] = summ[3].max(vnorm(&(dx * &bd.v[y][z] - &bd.d[z] * &bd.v[y][x])));
                summ[4] = summ[4].max(vnorm(&(dx.adjoint() * &bd.v[z][y] - bd.d[z].adjoint() * &bd.v[x][y])));
            }
        }
    }
    summ[0] = d[1];
    let mut t = CheckTable::new();
    for (k, v) in d.iter().enumerate() {
        t.push(&format!("D{}", k + 1), *v, tol);
    }
    let names = [
        "summary: S'v̄^x_y + D_y^*u_x = (i/2)v^y_x",
        "summary: D_xS' + S'D_xᵀ = 0",
        "summary: D_x^*S' + S'D̄_x = 0",
        "summary: D_xv^y_z = D_zv^y_x",
        "summary: D_x^*v^z_y = D_z^*v^x_y",
        "summary: D_xu_y = D_yu_x",
        "summary: D_α^* = D_α",
        "summary: v^α_β = v^β_α",
    ];
    for (name, v) in names.iter().zip(summ) {
        t.push(name, v, tol);
    }
    t.push("summary: ⟨u_x, v̄^z_y⟩ = ⟨u_z, v̄^x_y⟩", d[0], tol);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{realify, RealLieAlgebra, ComplexStructure, CompatibleMetric};

    fn kt_hermitian() -> HermitianAlgebra {
        let mut sc = StructureConstants::zeros(2);
        sc.set_d(0, 1, 0, c(-1.0, 0.0));
        realify(&sc, None, &Config::default()).unwrap().hermitian
    }

    #[test]
    fn torus_is_not_two_step() {
        let alg = RealLieAlgebra::abelian(4).unwrap();
        let h = HermitianAlgebra::new(alg, ComplexStructure::standard(4).unwrap(), CompatibleMetric::identity(4)).unwrap();
        assert!(matches!(build_admissible_frame(&h, &Config::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn kodaira_thurston_decomposition() {
        let cfg = Config::default();
        let dec = build_admissible_frame(&kt_hermitian(), &cfg).unwrap();
        assert_eq!(dec.shape, BlockShape { r: 0, s: 1, n: 2 });
        assert_eq!(dec.pure_type, PureType::I);
        let rep = verify_restrictions(dec.shape, &dec.constants, &cfg);
        assert!(rep.restriction1.pass(), "{:?}", rep.restriction1);
        assert!(!rep.restriction2.pass);
    }

    #[test]
    fn hs_blocks_require_s() {
        let sc = StructureConstants::zeros(2);
        let bd = extract_blocks(BlockShape { r: 1, s: 1, n: 2 }, &sc, None).unwrap();
        assert!(matches!(verify_hs_blocks(&bd, &Config::default()), Err(Error::Precondition(_))));
        assert!(extract_blocks(BlockShape { r: 2, s: 1, n: 2 }, &sc, None).is_err());
    }
}
