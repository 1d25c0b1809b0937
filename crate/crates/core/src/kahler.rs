//! From an HS structure on a 2-step solvable algebra to an explicit Kähler
//! metric: diagonalize the commuting family `{D_x}`, read off `λ_{xi}`, `ξ_x`
//! and `p_i`, and set `ψ_i = φ_i + p_i σ_i` with `σ_i = Σ_x λ_{xi} φ_x`.
//! Also generates the explicit family
//! `dφ_i = φ_i∧(σ_i − σ̄_i) − p_i σ_i∧σ̄_i`, `dφ_x = 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::StructureConstants;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::exterior::{Differential, InvariantForm};
use crate::linalg::{self, c, CMat, CVec};
use crate::metrics::FrameMetric;
use crate::solvable::{extract_blocks, BlockShape};

#[derive(Debug, Clone)]
pub struct Diagonalization {
    pub u: CMat,
    /// `lambdas[x][i]` = i-th diagonal entry of `U^* D_x U`.
    pub lambdas: Vec<Vec<Complex64>>,
    /// Largest off-diagonal magnitude left after the change of basis.
    pub off_diagonal: f64,
}

/// Orthonormal basis of span(q) closest to the coordinate axes.
fn canonical_basis(q: &CMat) -> Vec<CVec> {
    let r = q.nrows();
    let proj = q * q.adjoint();
    let mut basis: Vec<CVec> = vec![];
    let mut resid: Vec<CVec> = (0..r).map(|k| proj.column(k).into_owned()).collect();
    while basis.len() < q.ncols() {
        let norms: Vec<f64> = resid.iter().map(|v| v.norm()).collect();
        let best = norms.iter().cloned().fold(0.0, f64::max);
        if best <= 1e-12 {
            break;
        }
        let k = norms.iter().position(|&v| v >= best * (1.0 - 1e-9)).unwrap();
        let v = &resid[k] / c(norms[k], 0.0);
        for w in resid.iter_mut() {
            let dot = v.dotc(w);
            *w -= &v * dot;
        }
        basis.push(v);
    }
    basis
}

fn split_space(q: &CMat, ds: &[CMat], cfg: &Config, rng: &mut ChaCha8Rng, depth: usize) -> Vec<CMat> {
    let k = q.ncols();
    if k <= 1 || depth > 8 {
        return vec![q.clone()];
    }
    let restricted: Vec<CMat> = ds.iter().map(|d| q.adjoint() * d * q).collect();
    let mut h = CMat::zeros(k, k);
    for m in &restricted {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        h += (m + m.adjoint()) * c(a, 0.0) + (m - m.adjoint()) * c(0.0, b);
    }
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    let diameter = vals[k - 1] - vals[0];
    let scale = restricted.iter().map(linalg::max_abs).fold(0.0, f64::max);
    if diameter <= 1e-12 * scale.max(1e-300) {
        // one joint eigenspace unless some restricted matrix is not scalar
        let scalar = restricted.iter().all(|m| {
            let t = m.trace() / c(k as f64, 0.0);
            linalg::max_abs(&(m - CMat::identity(k, k) * t)) <= cfg.tol_alg * scale.max(1.0)
        });
        if scalar {
            return vec![q.clone()];
        }
        return split_space(q, ds, cfg, rng, depth + 1);
    }
    let gap = cfg.cluster_rel * diameter;
    let mut out = vec![];
    let mut start = 0;
    for idx in 1..=k {
        if idx == k || vals[idx] - vals[idx - 1] > gap {
            let sub = q * vecs.columns(start, idx - start);
            out.extend(split_space(&sub, ds, cfg, rng, depth + 1));
            start = idx;
        }
    }
    out
}

/// Unitary `U` with every `U^* D_x U` diagonal, for a commuting family of normal matrices.
pub fn simultaneous_diagonalize(ds: &[CMat], cfg: &Config) -> Result<Diagonalization> {
    let r = ds.first().map(|m| m.nrows()).unwrap_or(0);
    let scale = ds.iter().map(linalg::max_abs).fold(0.0, f64::max).max(1.0);
    let tol = cfg.tol_alg * scale * scale;
    for (x, a) in ds.iter().enumerate() {
        if a.nrows() != r || a.ncols() != r {
            return Err(Error::Dimension("matrices in the family differ in size".into()));
        }
        let normal = linalg::max_abs(&(a * a.adjoint() - a.adjoint() * a));
        if normal > tol {
            return Err(Error::Precondition(format!("matrix {x} is not normal (residual {normal:.3e})")));
        }
        for (y, b) in ds.iter().enumerate().skip(x + 1) {
            let comm = linalg::max_abs(&linalg::commutator(a, b));
            if comm > tol {
                return Err(Error::Precondition(format!("matrices {x} and {y} do not commute (residual {comm:.3e})")));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spaces = split_space(&CMat::identity(r, r), ds, cfg, &mut rng, 0);
    let mut cols: Vec<CVec> = spaces.iter().flat_map(canonical_basis).collect();
    let argmax = |v: &CVec| (0..v.len()).fold(0, |b, k| if v[k].norm() > v[b].norm() + 1e-12 { k } else { b });
    cols.sort_by_key(argmax);
    let u = if r == 0 { CMat::zeros(0, 0) } else { CMat::from_columns(&cols) };
    let mut off: f64 = 0.0;
    let lambdas = ds
        .iter()
        .map(|d| {
            let t = u.adjoint() * d * &u;
            for i in 0..r {
                for j in 0..r {
                    if i != j {
                        off = off.max(t[(i, j)].norm());
                    }
                }
            }
            (0..r).map(|i| t[(i, i)]).collect()
        })
        .collect();
    Ok(Diagonalization { u, lambdas, off_diagonal: off })
}

/// Intermediate quantities of the Kählerization argument.
#[derive(Debug, Clone)]
pub struct ClaimsRecord {
    pub shape: BlockShape,
    /// Frame change `A` (coframe `φ̃ = Aᵀφ`) to the frame where all `D_x` are diagonal.
    pub change: CMat,
    pub u: CMat,
    /// `lambda[(x − r, i)] = λ_{xi}`.
    pub lambda: CMat,
    /// `xi[x − r]`.
    pub xi: Vec<CVec>,
    pub p: CVec,
    pub residuals: BTreeMap<String, f64>,
}

fn conj_m(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Claims 1–5 on an HS solution `S` in an admissible frame with metric `g`.
pub fn claims_pipeline(shape: BlockShape, sc: &StructureConstants, s: &CMat, cfg: &Config) -> Result<ClaimsRecord> {
    let BlockShape { r, n, .. } = shape;
    let m = n - r;
    let bd = extract_blocks(shape, sc, Some(s))?;
    let scale = sc.max_abs().max(1.0);
    let tol = cfg.tol_alg * scale;
    let mut res = BTreeMap::new();

    let z_norm = (shape.s - r..m).map(|a| bd.z[a].norm()).fold(0.0, f64::max);
    let w_norm = (0..m).flat_map(|x| (0..m).map(move |y| (x, y))).map(|(x, y)| bd.w[x][y].norm()).fold(0.0, f64::max);
    let cd_norm = (0..m).map(|x| (&bd.c[x] + &bd.d[x]).norm()).fold(0.0, f64::max);
    let mut claim1 = 0f64;
    for x in 0..m {
        let cd = &bd.c[x] + &bd.d[x];
        let e = bd.z[x].transpose() * conj_m(&bd.z[x]) + cd.adjoint() * &cd - linalg::commutator(&bd.c[x].adjoint(), &bd.c[x]);
        claim1 = claim1.max(e.norm());
    }
    res.insert("claim1_z".to_string(), z_norm);
    res.insert("claim1_c_plus_d".to_string(), cd_norm);
    res.insert("claim1_identity".to_string(), claim1);
    res.insert("claim2_w".to_string(), w_norm);
    for (claim, v) in [("claim1_z", z_norm), ("claim1_c_plus_d", cd_norm), ("claim2_w", w_norm)] {
        if v > tol {
            return Err(Error::ClaimViolation { claim: claim.to_string(), residual: v });
        }
    }

    let sp = bd.s_prime.as_ref().expect("S attached");
    let ss = sp.adjoint() * sp;
    let claim3 = (0..m)
        .map(|x| linalg::commutator(&bd.d[x], &ss).norm().max(linalg::commutator(&bd.d[x].adjoint(), &ss).norm()))
        .fold(0.0, f64::max);
    res.insert("claim3".to_string(), claim3);
    let mut claim4 = 0f64;
    for x in 0..m {
        for y in 0..m {
            let v = &bd.v[x][y];
            claim4 = claim4
                .max(linalg::column_space_residual(&bd.d[x], v, cfg.tol_rank))
                .max(linalg::column_space_residual(&bd.d[y], v, cfg.tol_rank));
        }
    }
    res.insert("claim4".to_string(), claim4);

    let diag = simultaneous_diagonalize(&bd.d, cfg)?;
    res.insert("diagonalization".to_string(), diag.off_diagonal);
    let change = linalg::embed_top_left(&diag.u, n);
    let sct = sc.change_frame(&change, cfg)?;
    let st = {
        let ainv = linalg::inverse(&change, cfg.tol_rank)?;
        &ainv * s * ainv.transpose()
    };
    let bdt = extract_blocks(shape, &sct, Some(&st))?;
    let lambda = CMat::from_fn(m, r, |x, i| bdt.d[x][(i, i)]);
    let lam_max = linalg::max_abs(&lambda);
    for i in 0..r {
        if lambda.column(i).norm() <= cfg.sigma_zero_rel * lam_max.max(1e-300) || lam_max == 0.0 {
            return Err(Error::Structure(format!("t_{} = (λ_{{x{}}})_x vanishes", i + 1, i + 1)));
        }
    }
    let xi: Vec<CVec> = (0..m)
        .map(|x| {
            CVec::from_fn(r, |i, _| {
                let l = lambda[(x, i)];
                if l.norm() <= cfg.sigma_zero_rel * lam_max {
                    c(0.0, 0.0)
                } else {
                    bdt.v[x][x][i] / l
                }
            })
        })
        .collect();
    let mut p = CVec::zeros(r);
    let mut proportional = 0f64;
    for i in 0..r {
        let t = lambda.column(i);
        let q: Complex64 = (0..m).map(|x| t[x] * xi[x][i]).sum::<Complex64>() / t.norm_squared();
        p[i] = q.conj();
        let tau_err = (0..m).map(|x| (xi[x][i] - q * t[x].conj()).norm_sqr()).sum::<f64>().sqrt();
        proportional = proportional.max(tau_err);
    }
    res.insert("proportionality".to_string(), proportional);
    let mut claim5 = 0f64;
    for x in 0..m {
        for y in 0..m {
            claim5 = claim5.max((&bdt.v[x][y] - &bdt.d[y] * &xi[x]).norm());
        }
    }
    res.insert("claim5".to_string(), claim5);
    let sv = linalg::singular_values(&lambda);
    let indep = if sv.len() < r || lam_max == 0.0 { 0.0 } else { sv[r - 1] / sv[0] };
    res.insert("t_independence".to_string(), indep);
    Ok(ClaimsRecord { shape, change, u: diag.u, lambda, xi, p, residuals: res })
}

#[derive(Debug, Clone)]
pub struct KahlerCertificate {
    pub lambda: CMat,
    pub p: CVec,
    pub u: CMat,
    /// `ψ_a = Σ_b psi_coeffs[(a, b)] φ_b` in the admissible coframe.
    pub psi_coeffs: CMat,
    pub omega_tilde: InvariantForm,
    pub residuals: BTreeMap<String, f64>,
}

/// Builds `ω̃ = i Σ g̃_{ab̄} ψ_a ∧ ψ̄_b` and certifies `dω̃ = 0`.
pub fn kahlerize(shape: BlockShape, sc: &StructureConstants, s: &CMat, g: &FrameMetric, cfg: &Config) -> Result<KahlerCertificate> {
    let BlockShape { r, n, .. } = shape;
    let rec = claims_pipeline(shape, sc, s, cfg)?;
    let mut residuals = rec.residuals.clone();
    // ψ = P φ̃ with φ̃ = Aᵀ φ
    let mut pmat = CMat::identity(n, n);
    for i in 0..r {
        for x in r..n {
            pmat[(i, x)] = rec.p[i] * rec.lambda[(x - r, i)];
        }
    }
    let psi_coeffs = &pmat * rec.change.transpose();
    let psi: Vec<InvariantForm> = (0..n)
        .map(|a| {
            let mut f = InvariantForm::zero(n);
            for b in 0..n {
                f.add_term(1u64 << b, psi_coeffs[(a, b)]);
            }
            f
        })
        .collect();
    let gt = g.change_frame(&rec.change, cfg)?;
    let gm = gt.matrix();
    let mut omega = InvariantForm::zero(n);
    for a in 0..n {
        for b in 0..n {
            if gm[(a, b)].norm() > 0.0 {
                omega = &omega + &(&psi[a].wedge(&psi[b].conj()) * (gm[(a, b)] * c(0.0, 1.0)));
            }
        }
    }
    let d = Differential::new(sc);
    let mut termwise = 0f64;
    for p in psi.iter().take(r) {
        termwise = termwise.max(d.apply(&p.wedge(&p.conj())).sup_norm());
    }
    let tol_cert = cfg.tol_cert * sc.max_abs().max(1.0);
    let dw = d.apply(&omega).sup_norm();
    residuals.insert("d_psi_psibar".to_string(), termwise);
    residuals.insert("d_omega_tilde".to_string(), dw);
    if termwise > tol_cert {
        return Err(Error::Certification { term: "d(ψ_i∧ψ̄_i)".into(), residual: termwise });
    }
    if dw > tol_cert {
        return Err(Error::Certification { term: "dω̃".into(), residual: dw });
    }
    if shape.s > r {
        let lam_imag = (0..(shape.s - r)).flat_map(|x| (0..r).map(move |i| (x, i))).map(|(x, i)| rec.lambda[(x, i)].im.abs()).fold(0.0, f64::max);
        let p_imag = rec.p.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        residuals.insert("lambda_alpha_imag".to_string(), lam_imag);
        residuals.insert("p_imag".to_string(), p_imag);
    }
    let positive = crate::exterior::positivity_11(&omega).unwrap_or(false);
    if !positive {
        return Err(Error::Certification { term: "ω̃ positivity".into(), residual: f64::NAN });
    }
    Ok(KahlerCertificate { lambda: rec.lambda, p: rec.p, u: rec.u, psi_coeffs, omega_tilde: omega, residuals })
}

/// An instance of the explicit family, with its HS solution.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub r: usize,
    pub n: usize,
    pub lambda: CMat,
    pub p: CVec,
    pub constants: StructureConstants,
    pub metric: FrameMetric,
    pub s: CMat,
}

/// Structure constants of `dφ_i = φ_i∧(σ_i − σ̄_i) − p_i σ_i∧σ̄_i`, `dφ_x = 0`
/// with the identity metric; `lambda` is `(n − r) × r`.
pub fn generate_family(r: usize, n: usize, lambda: &CMat, p: &CVec) -> Result<FamilyInstance> {
    if r == 0 || r >= n || n > 32 {
        return Err(Error::Parameter(format!("need 1 ≤ r < n ≤ 32, got r = {r}, n = {n}")));
    }
    if lambda.nrows() != n - r || lambda.ncols() != r || p.len() != r {
        return Err(Error::Parameter(format!("λ must be {}x{r} and p of length {r}", n - r)));
    }
    let scale = linalg::max_abs(lambda);
    for i in 0..r {
        if lambda.column(i).norm() <= 1e-12 * scale.max(1e-300) || scale == 0.0 {
            return Err(Error::Parameter(format!("t_{} is zero", i + 1)));
        }
    }
    let sv = linalg::singular_values(lambda);
    if sv.len() < r || sv[r - 1] <= 1e-8 * sv[0] {
        return Err(Error::Parameter("the vectors t_i are linearly dependent".into()));
    }
    let mut sc = StructureConstants::zeros(n);
    let mut s = CMat::zeros(n, n);
    for i in 0..r {
        for x in r..n {
            let l = lambda[(x - r, i)];
            sc.set_c(i, i, x, -l);
            sc.set_d(i, i, x, l);
            for y in r..n {
                sc.set_d(y, i, x, p[i].conj() * l * lambda[(y - r, i)].conj());
            }
            let v = c(0.0, 0.5) * p[i].conj() * l;
            s[(i, x)] = v;
            s[(x, i)] = -v;
        }
    }
    Ok(FamilyInstance { r, n, lambda: lambda.clone(), p: p.clone(), constants: sc, metric: FrameMetric::identity(n), s })
}

/// A seeded family instance with entries of λ and p uniform in the unit square.
pub fn random_family(r: usize, n: usize, seed: u64) -> Result<FamilyInstance> {
    if r == 0 || r >= n || n - r < r {
        return Err(Error::Parameter(format!("need 1 ≤ r < n and n − r ≥ r for independent t_i, got r = {r}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let lambda = CMat::from_fn(n - r, r, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p = CVec::from_fn(r, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        if let Ok(inst) = generate_family(r, n, &lambda, &p) {
            return Ok(inst);
        }
    }
    Err(Error::Parameter("could not sample independent t_i".into()))
}
