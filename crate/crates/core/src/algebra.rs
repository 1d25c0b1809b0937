//! Real Lie algebras with a complex structure and a compatible inner product,
//! their complexification, frames of 𝔤^{1,0}, and the complex structure
//! constants `C^j_{ik} = φ_j([e_i, e_k])`, `D^j_{ik} = φ̄_i([ē_j, e_k])`.
//!
//! All indices are 0-based in code.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, RMat, I};
use crate::Check;

/// Dense complex 3-tensor `T^up_{a b}` with all indices in `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<Complex64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let mut t = Self::zeros(n);
        for up in 0..n {
            for a in 0..n {
                for b in 0..n {
                    t.data[(up * n + a) * n + b] = f(up, a, b);
                }
            }
        }
        t
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, up: usize, a: usize, b: usize) -> Complex64 {
        self.data[(up * self.n + a) * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, up: usize, a: usize, b: usize, v: Complex64) {
        self.data[(up * self.n + a) * self.n + b] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `out[u][a][b] = Σ P[u][u'] Q[a][a'] R[b][b'] self[u'][a'][b']`.
    pub fn transform(&self, p: &CMat, q: &CMat, r: &CMat) -> Tensor3 {
        let n = self.n;
        // contract one index at a time: O(n^4)
        let mut s1 = Tensor3::zeros(n);
        for u in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for bb in 0..n {
                        acc += r[(b, bb)] * self.get(u, a, bb);
                    }
                    s1.set(u, a, b, acc);
                }
            }
        }
        let mut s2 = Tensor3::zeros(n);
        for u in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for aa in 0..n {
                        acc += q[(a, aa)] * s1.get(u, aa, b);
                    }
                    s2.set(u, a, b, acc);
                }
            }
        }
        let mut out = Tensor3::zeros(n);
        for u in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for uu in 0..n {
                        acc += p[(u, uu)] * s2.get(uu, a, b);
                    }
                    out.set(u, a, b, acc);
                }
            }
        }
        out
    }
}

/// Real Lie algebra of even dimension `2n` given by `[b_a, b_b] = Σ_c f^c_{ab} b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLieAlgebra {
    dim: usize,
    f: Vec<f64>,
}

impl RealLieAlgebra {
    pub fn abelian(dim: usize) -> Result<Self> {
        Self::from_dense(dim, vec![0.0; dim * dim * dim])
    }

    /// Dense constructor; `f[(c * dim + a) * dim + b] = f^c_{ab}` must be antisymmetric in (a, b).
    pub fn from_dense(dim: usize, f: Vec<f64>) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!("real dimension must be even and positive, got {dim}")));
        }
        if f.len() != dim * dim * dim {
            return Err(Error::Dimension(format!("expected {} structure constants, got {}", dim * dim * dim, f.len())));
        }
        let mut alg = Self { dim, f };
        for cc in 0..dim {
            for a in 0..dim {
                for b in a..dim {
                    let ab = alg.get(cc, a, b);
                    let ba = alg.get(cc, b, a);
                    if (ab + ba).abs() > 1e-12 * (1.0 + ab.abs()) {
                        return Err(Error::Validation {
                            field: "f".into(),
                            message: format!("f^{cc}_{{{a}{b}}} = {ab} but f^{cc}_{{{b}{a}}} = {ba}"),
                        });
                    }
                    let mean = 0.5 * (ab - ba);
                    alg.set_pair(cc, a, b, mean);
                }
            }
        }
        Ok(alg)
    }

    /// Builds from sparse `(c, a, b, value)` entries; each entry also sets `f^c_{ba} = −value`.
    pub fn from_triples(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut alg = Self::abelian(dim)?;
        for &(cc, a, b, v) in entries {
            if cc >= dim || a >= dim || b >= dim {
                return Err(Error::Validation { field: "f".into(), message: format!("index ({cc},{a},{b}) out of range for dim {dim}") });
            }
            if a == b && v != 0.0 {
                return Err(Error::Validation { field: "f".into(), message: format!("diagonal entry f^{cc}_{{{a}{a}}} must vanish") });
            }
            let existing = alg.get(cc, a, b);
            if existing != 0.0 && (existing - v).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(Error::Validation {
                    field: "f".into(),
                    message: format!("conflicting values for f^{cc}_{{{a}{b}}}: {existing} vs {v}"),
                });
            }
            alg.set_pair(cc, a, b, v);
        }
        Ok(alg)
    }

    fn set_pair(&mut self, cc: usize, a: usize, b: usize, v: f64) {
        let d = self.dim;
        self.f[(cc * d + a) * d + b] = v;
        self.f[(cc * d + b) * d + a] = -v;
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, cc: usize, a: usize, b: usize) -> f64 {
        self.f[(cc * self.dim + a) * self.dim + b]
    }

    pub fn dense(&self) -> &[f64] {
        &self.f
    }

    /// Nonzero entries with `a < b`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, f64)> {
        let d = self.dim;
        let mut out = vec![];
        for cc in 0..d {
            for a in 0..d {
                for b in (a + 1)..d {
                    let v = self.get(cc, a, b);
                    if v != 0.0 {
                        out.push((cc, a, b, v));
                    }
                }
            }
        }
        out
    }

    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for a in 0..d {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                let w = u[a] * v[b];
                if w == 0.0 {
                    continue;
                }
                for (cc, o) in out.iter_mut().enumerate() {
                    *o += self.get(cc, a, b) * w;
                }
            }
        }
        out
    }

    /// Complex-bilinear extension of the bracket to 𝔤 ⊗ ℂ.
    pub fn bracket_c(&self, u: &CVec, v: &CVec) -> CVec {
        let d = self.dim;
        let mut out = CVec::zeros(d);
        for a in 0..d {
            for b in 0..d {
                let w = u[a] * v[b];
                if w.norm() == 0.0 {
                    continue;
                }
                for cc in 0..d {
                    out[cc] += w * self.get(cc, a, b);
                }
            }
        }
        out
    }

    pub fn bracket_real_vec(&self, u: &RMat, v: &RMat) -> RMat {
        let out = self.bracket(u.as_slice(), v.as_slice());
        RMat::from_vec(self.dim, 1, out)
    }

    /// max over (a, b, c, e) of |Σ_d f^d_{ab} f^e_{dc} + f^d_{bc} f^e_{da} + f^d_{ca} f^e_{db}|.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for e in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            s += self.get(d, a, b) * self.get(e, d, cc)
                                + self.get(d, b, cc) * self.get(e, d, a)
                                + self.get(d, cc, a) * self.get(e, d, b);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Same algebra written in the basis `b'_k = Σ_a P[a][k] b_a`.
    pub fn change_basis(&self, p: &RMat) -> Result<Self> {
        let d = self.dim;
        let pinv = p.clone().try_inverse().ok_or_else(|| Error::Rank("basis change is singular".into()))?;
        let mut f = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                let br = self.bracket(p.column(a).as_slice(), p.column(b).as_slice());
                let coords = &pinv * RMat::from_vec(d, 1, br);
                for cc in 0..d {
                    f[(cc * d + a) * d + b] = coords[cc];
                }
            }
        }
        Self::from_dense(d, f)
    }
}

/// Linear complex structure `J` on 𝔤, acting on coordinate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    j: RMat,
}

impl ComplexStructure {
    pub fn new(j: RMat) -> Result<Self> {
        if j.nrows() != j.ncols() || !j.nrows().is_multiple_of(2) || j.nrows() == 0 {
            return Err(Error::Dimension(format!("J must be a non-empty even square matrix, got {}x{}", j.nrows(), j.ncols())));
        }
        Ok(Self { j })
    }

    /// J b_{2k} = b_{2k+1}, J b_{2k+1} = −b_{2k}.
    pub fn standard(dim: usize) -> Result<Self> {
        let mut j = RMat::zeros(dim, dim);
        for k in 0..dim / 2 {
            j[(2 * k + 1, 2 * k)] = 1.0;
            j[(2 * k, 2 * k + 1)] = -1.0;
        }
        Self::new(j)
    }

    pub fn matrix(&self) -> &RMat {
        &self.j
    }

    pub fn square_residual(&self) -> f64 {
        let d = self.j.nrows();
        linalg::max_abs_real(&(&self.j * &self.j + RMat::identity(d, d)))
    }

    /// max over basis pairs of |[x,y] − [Jx,Jy] + J[Jx,y] + J[x,Jy]|.
    pub fn integrability_residual(&self, alg: &RealLieAlgebra) -> f64 {
        let d = alg.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let x = RMat::from_fn(d, 1, |r, _| if r == a { 1.0 } else { 0.0 });
                let y = RMat::from_fn(d, 1, |r, _| if r == b { 1.0 } else { 0.0 });
                let jx = &self.j * &x;
                let jy = &self.j * &y;
                let n = alg.bracket_real_vec(&x, &y) - alg.bracket_real_vec(&jx, &jy)
                    + &self.j * alg.bracket_real_vec(&jx, &y)
                    + &self.j * alg.bracket_real_vec(&x, &jy);
                worst = worst.max(linalg::max_abs_real(&n));
            }
        }
        worst
    }
}

/// J-compatible inner product on 𝔤.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleMetric {
    g: RMat,
}

impl CompatibleMetric {
    pub fn new(g: RMat) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::Dimension("metric must be square".into()));
        }
        let asym = linalg::max_abs_real(&(&g - g.transpose()));
        if asym > 1e-12 * (1.0 + linalg::max_abs_real(&g)) {
            return Err(Error::Validation { field: "G".into(), message: format!("not symmetric (asymmetry {asym:.3e})") });
        }
        let g = (&g + g.transpose()) * 0.5;
        if Cholesky::new(g.clone()).is_none() {
            return Err(Error::Validation { field: "G".into(), message: "not positive definite".into() });
        }
        Ok(Self { g })
    }

    pub fn identity(dim: usize) -> Self {
        Self { g: RMat::identity(dim, dim) }
    }

    pub fn matrix(&self) -> &RMat {
        &self.g
    }

    /// |JᵀGJ − G|_max.
    pub fn compatibility_residual(&self, j: &ComplexStructure) -> f64 {
        let jm = j.matrix();
        linalg::max_abs_real(&(jm.transpose() * &self.g * jm - &self.g))
    }

    /// Complex-bilinear extension ⟨u, v⟩ = uᵀ G v.
    pub fn pair(&self, u: &CVec, v: &CVec) -> Complex64 {
        let gc = linalg::to_complex(&self.g);
        (u.transpose() * gc * v)[(0, 0)]
    }

    pub(crate) fn lower_factor(&self) -> RMat {
        Cholesky::new(self.g.clone()).expect("validated positive definite").l()
    }
}

/// A basis `e_1..e_n` of 𝔤^{1,0}, stored as a complex 2n×n coefficient matrix
/// over the real basis of 𝔤.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    e: CMat,
    /// Inverse of `[E | Ē]`; rows `0..n` are φ, rows `n..2n` are φ̄.
    dual: CMat,
}

impl Frame {
    pub fn new(e: CMat, j: &ComplexStructure, cfg: &Config) -> Result<Self> {
        let d = j.matrix().nrows();
        let n = d / 2;
        if e.nrows() != d || e.ncols() != n {
            return Err(Error::Dimension(format!("frame must be {d}x{n}, got {}x{}", e.nrows(), e.ncols())));
        }
        let scale = linalg::max_abs(&e).max(1e-300);
        let jc = linalg::to_complex(j.matrix());
        let type_res = linalg::max_abs(&((CMat::identity(d, d) + jc * I) * &e)) / scale;
        if type_res > cfg.tol_alg {
            return Err(Error::Type(format!("frame columns are not of type (1,0) (residual {type_res:.3e})")));
        }
        let sv = linalg::singular_values(&e);
        if sv.is_empty() || *sv.last().unwrap() <= cfg.tol_rank * sv[0] {
            return Err(Error::Rank("frame columns are linearly dependent".into()));
        }
        let full = Self::full_matrix(&e);
        let dual = linalg::inverse(&full, cfg.tol_rank)?;
        Ok(Self { e, dual })
    }

    fn full_matrix(e: &CMat) -> CMat {
        let (d, n) = e.shape();
        CMat::from_fn(d, 2 * n, |r, k| if k < n { e[(r, k)] } else { e[(r, k - n)].conj() })
    }

    pub fn n(&self) -> usize {
        self.e.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.e
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.e.column(i).into_owned()
    }

    pub fn conj_vector(&self, i: usize) -> CVec {
        self.e.column(i).map(|z| z.conj())
    }

    /// Coordinates of a complexified vector in the basis `{e, ē}`.
    pub fn coordinates(&self, v: &CVec) -> CVec {
        &self.dual * v
    }

    /// `g_{ij̄} = ⟨e_i, ē_j⟩`.
    pub fn gram(&self, metric: &CompatibleMetric) -> CMat {
        let gc = linalg::to_complex(metric.matrix());
        self.e.transpose() * gc * self.e.map(|z| z.conj())
    }

    /// Frame `ẽ_i = Σ_j (A^{-1})_{ij} e_j`.
    pub fn transformed(&self, a: &CMat, j: &ComplexStructure, cfg: &Config) -> Result<Frame> {
        let ainv = linalg::inverse(a, cfg.tol_rank)?;
        Frame::new(&self.e * ainv.transpose(), j, cfg)
    }
}

/// Complex structure constants `C^j_{ik}` and `D^j_{ik}` in some frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    n: usize,
    c: Tensor3,
    d: Tensor3,
}

impl StructureConstants {
    pub fn zeros(n: usize) -> Self {
        Self { n, c: Tensor3::zeros(n), d: Tensor3::zeros(n) }
    }

    /// Validates `C^j_{ik} = −C^j_{ki}` (to 1e-12) and stores the exactly antisymmetrized tensor.
    pub fn new(c: Tensor3, d: Tensor3) -> Result<Self> {
        let n = c.n();
        if d.n() != n {
            return Err(Error::Dimension(format!("C has n = {n} but D has n = {}", d.n())));
        }
        let scale = 1.0 + c.max_abs();
        let mut out = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                for k in i..n {
                    let a = c.get(j, i, k);
                    let b = c.get(j, k, i);
                    if (a + b).norm() > 1e-12 * scale {
                        return Err(Error::Validation {
                            field: "C".into(),
                            message: format!("C^{j}_{{{i}{k}}} = {a} is not minus C^{j}_{{{k}{i}}} = {b}"),
                        });
                    }
                    out.set_c(j, i, k, (a - b) * 0.5);
                }
            }
        }
        out.d = d;
        Ok(out)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn c(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.c.get(j, i, k)
    }

    #[inline]
    pub fn d(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.d.get(j, i, k)
    }

    /// Sets `C^j_{ik} = v` and `C^j_{ki} = −v`.
    pub fn set_c(&mut self, j: usize, i: usize, k: usize, v: Complex64) {
        if i == k {
            self.c.set(j, i, k, Complex64::new(0.0, 0.0));
            return;
        }
        self.c.set(j, i, k, v);
        self.c.set(j, k, i, -v);
    }

    pub fn set_d(&mut self, j: usize, i: usize, k: usize, v: Complex64) {
        self.d.set(j, i, k, v);
    }

    pub fn c_tensor(&self) -> &Tensor3 {
        &self.c
    }

    pub fn d_tensor(&self) -> &Tensor3 {
        &self.d
    }

    pub fn max_abs(&self) -> f64 {
        self.c.max_abs().max(self.d.max_abs())
    }

    pub fn max_abs_diff(&self, other: &StructureConstants) -> f64 {
        self.c.max_abs_diff(&other.c).max(self.d.max_abs_diff(&other.d))
    }

    /// Complex bracket table on the basis `{e_1..e_n, ē_1..ē_n}` reconstructed
    /// from `[e_i, e_j] = Σ C^k_{ij} e_k` and `[e_i, ē_j] = Σ (conj(D^i_{kj}) e_k − D^j_{ki} ē_k)`.
    ///
    /// Returns `br[(a * 2n + b)]` = coordinates of `[E_a, E_b]`.
    pub fn bracket_table(&self) -> Vec<CVec> {
        let n = self.n;
        let m = 2 * n;
        let mut table = vec![CVec::zeros(m); m * m];
        for i in 0..n {
            for j in 0..n {
                let mut ee = CVec::zeros(m);
                let mut eb = CVec::zeros(m);
                for k in 0..n {
                    ee[k] = self.c(k, i, j);
                    eb[k] = self.d(i, k, j).conj();
                    eb[n + k] = -self.d(j, k, i);
                }
                // [ē_i, ē_j] = conj([e_i, e_j])
                let mut bb = CVec::zeros(m);
                for k in 0..n {
                    bb[n + k] = ee[k].conj();
                    bb[k] = ee[n + k].conj();
                }
                table[i * m + j] = ee;
                table[(n + i) * m + (n + j)] = bb;
                table[(n + j) * m + i] = -&eb;
                table[i * m + (n + j)] = eb;
            }
        }
        table
    }

    /// Transforms the constants to the frame `ẽ_i = Σ_j (A^{-1})_{ij} e_j`
    /// (coframe `φ̃ = Aᵀ φ`).
    pub fn change_frame(&self, a: &CMat, cfg: &Config) -> Result<StructureConstants> {
        let n = self.n;
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!("change matrix must be {n}x{n}")));
        }
        let ainv = linalg::inverse(a, cfg.tol_rank)?;
        let c = self.c.transform(&a.transpose(), &ainv, &ainv);
        let d = self.d.transform(&ainv.map(|z| z.conj()), &a.adjoint(), &ainv);
        Self::new(c, d)
    }

    /// Residual of the three families of first Bianchi identities, written
    /// directly in terms of `C` and `D`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let (cc, dd) = (&self.c, &self.d);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut b1 = Complex64::new(0.0, 0.0);
                        let mut b2 = Complex64::new(0.0, 0.0);
                        let mut b3 = Complex64::new(0.0, 0.0);
                        for r in 0..n {
                            b1 += cc.get(r, i, j) * cc.get(l, r, k)
                                + cc.get(r, j, k) * cc.get(l, r, i)
                                + cc.get(r, k, i) * cc.get(l, r, j);
                            b2 += cc.get(r, i, k) * dd.get(l, j, r) + dd.get(r, j, i) * dd.get(l, r, k)
                                - dd.get(r, j, k) * dd.get(l, r, i);
                            b3 += cc.get(r, i, k) * dd.get(r, j, l).conj()
                                - cc.get(j, r, k) * dd.get(i, r, l).conj()
                                + cc.get(j, r, i) * dd.get(k, r, l).conj()
                                - dd.get(l, r, i) * dd.get(k, j, r).conj()
                                + dd.get(l, r, k) * dd.get(i, j, r).conj();
                        }
                        worst = worst.max(b1.norm()).max(b2.norm()).max(b3.norm());
                    }
                }
            }
        }
        worst
    }
}

/// Reads off `C` and `D` of `alg` in `frame` by pairing brackets with the dual coframe.
pub fn complexify_and_extract(alg: &RealLieAlgebra, j: &ComplexStructure, frame: &Frame, cfg: &Config) -> Result<StructureConstants> {
    let d = alg.dim();
    if j.matrix().nrows() != d || frame.matrix().nrows() != d {
        return Err(Error::Dimension(format!("algebra has dim {d} but J/frame have {}/{}", j.matrix().nrows(), frame.matrix().nrows())));
    }
    // re-validate against this J; a frame built for another J is a type error
    let frame = Frame::new(frame.matrix().clone(), j, cfg)?;
    let n = d / 2;
    let mut sc = StructureConstants::zeros(n);
    let es: Vec<CVec> = (0..n).map(|i| frame.vector(i)).collect();
    let ebs: Vec<CVec> = (0..n).map(|i| frame.conj_vector(i)).collect();
    for i in 0..n {
        for k in (i + 1)..n {
            let coords = frame.coordinates(&alg.bracket_c(&es[i], &es[k]));
            for jj in 0..n {
                sc.set_c(jj, i, k, coords[jj]);
            }
        }
    }
    for jj in 0..n {
        for k in 0..n {
            let coords = frame.coordinates(&alg.bracket_c(&ebs[jj], &es[k]));
            for i in 0..n {
                sc.set_d(jj, i, k, coords[n + i]);
            }
        }
    }
    Ok(sc)
}

/// Max over i of |Σ_r (C^r_{ri} + D^r_{ri})|; unimodular iff below `tol_alg`.
pub fn unimodularity_check(sc: &StructureConstants, cfg: &Config) -> Check {
    let n = sc.n();
    let residual = (0..n)
        .map(|i| (0..n).map(|r| sc.c(r, r, i) + sc.d(r, r, i)).sum::<Complex64>().norm())
        .fold(0.0, f64::max);
    Check::new(residual, cfg.tol_alg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvableProfile {
    pub derived_series_dims: Vec<usize>,
    pub is_2step_solvable: bool,
}

/// Orthonormal basis of the span of all brackets of the columns of `q`.
pub fn bracket_span(alg: &RealLieAlgebra, q: &RMat, tol_rel: f64) -> RMat {
    let d = alg.dim();
    let k = q.ncols();
    let mut cols = vec![];
    for a in 0..k {
        for b in (a + 1)..k {
            cols.push(alg.bracket(q.column(a).as_slice(), q.column(b).as_slice()));
        }
    }
    if cols.is_empty() {
        return RMat::zeros(d, 0);
    }
    let m = RMat::from_fn(d, cols.len(), |r, cidx| cols[cidx][r]);
    // scale-aware: a zero bracket matrix has rank 0
    if linalg::max_abs_real(&m) <= 1e-13 {
        return RMat::zeros(d, 0);
    }
    linalg::orth_real(&m, tol_rel)
}

/// Dimensions of the derived series 𝔤 ⊇ 𝔤' ⊇ 𝔤'' ⊇ … (stops at 0 or when it stabilizes).
pub fn solvable_profile(alg: &RealLieAlgebra, cfg: &Config) -> SolvableProfile {
    let d = alg.dim();
    let mut q = RMat::identity(d, d);
    let mut dims = vec![d];
    loop {
        let next = bracket_span(alg, &q, cfg.tol_rank);
        let nd = next.ncols();
        dims.push(nd);
        if nd == 0 || nd == q.ncols() {
            break;
        }
        q = next;
    }
    let is_2step = dims.len() >= 3 && dims[1] > 0 && dims[2] == 0;
    SolvableProfile { derived_series_dims: dims, is_2step_solvable: is_2step }
}

/// A real Lie algebra with complex structure and compatible metric.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianAlgebra {
    pub alg: RealLieAlgebra,
    pub j: ComplexStructure,
    pub metric: CompatibleMetric,
}

impl HermitianAlgebra {
    pub fn new(alg: RealLieAlgebra, j: ComplexStructure, metric: CompatibleMetric) -> Result<Self> {
        let d = alg.dim();
        if j.matrix().nrows() != d || metric.matrix().nrows() != d {
            return Err(Error::Dimension("algebra, J and G disagree on dimension".into()));
        }
        Ok(Self { alg, j, metric })
    }

    pub fn n(&self) -> usize {
        self.alg.dim() / 2
    }

    /// Residuals of J² = −1, integrability, J-compatibility and Jacobi.
    pub fn validation_residuals(&self) -> ValidationResiduals {
        ValidationResiduals {
            j_square: self.j.square_residual(),
            integrability: self.j.integrability_residual(&self.alg),
            compatibility: self.metric.compatibility_residual(&self.j),
            jacobi: self.alg.jacobi_residual(),
        }
    }

    pub(crate) fn orthonormal_coords(&self) -> OrthoCoords {
        OrthoCoords::new(&self.metric, &self.j)
    }

    /// A unitary frame `e_k = (x_k − iJx_k)/√2` from a J-adapted orthonormal basis.
    pub fn unitary_frame(&self, cfg: &Config) -> Result<Frame> {
        let oc = self.orthonormal_coords();
        let d = self.alg.dim();
        let xs = j_adapted_basis(&RMat::identity(d, d), &oc.j)?;
        let cols: Vec<CVec> = xs.iter().map(|x| oc.to_x_c(&unit_type10(x, &oc.j, std::f64::consts::SQRT_2))).collect();
        Frame::new(CMat::from_columns(&cols), &self.j, cfg)
    }

    /// Same Hermitian algebra in the real basis `b'_k = Σ_a P[a][k] b_a`.
    pub fn change_basis(&self, p: &RMat) -> Result<Self> {
        let pinv = p.clone().try_inverse().ok_or_else(|| Error::Rank("basis change is singular".into()))?;
        let alg = self.alg.change_basis(p)?;
        let j = ComplexStructure::new(&pinv * self.j.matrix() * p)?;
        let metric = CompatibleMetric::new(p.transpose() * self.metric.matrix() * p)?;
        Self::new(alg, j, metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationResiduals {
    pub j_square: f64,
    pub integrability: f64,
    pub compatibility: f64,
    pub jacobi: f64,
}

/// Coordinates `y = Lᵀ x` in which the metric is the identity (G = L Lᵀ).
pub(crate) struct OrthoCoords {
    l_t_inv: RMat,
    /// J expressed in y-coordinates; orthogonal and skew.
    pub j: RMat,
}

impl OrthoCoords {
    fn new(metric: &CompatibleMetric, j: &ComplexStructure) -> Self {
        let l = metric.lower_factor();
        let l_t = l.transpose();
        let l_t_inv = l_t.clone().try_inverse().expect("cholesky factor is invertible");
        let jy = &l_t * j.matrix() * &l_t_inv;
        Self { l_t_inv, j: jy }
    }

    pub fn to_x_c(&self, y: &CVec) -> CVec {
        linalg::to_complex(&self.l_t_inv) * y
    }
}

/// `(x − iJx)/scale` as a complex column.
pub(crate) fn unit_type10(x: &RMat, j: &RMat, scale: f64) -> CVec {
    let jx = j * x;
    CVec::from_fn(x.nrows(), |r, _| c(x[(r, 0)], -jx[(r, 0)]) / scale)
}

/// Orthonormal basis `x_1, Jx_1, x_2, Jx_2, …` of a J-invariant subspace given
/// by orthonormal columns `q`, with `j` orthogonal and skew. Returns the `x_k`.
pub(crate) fn j_adapted_basis(q: &RMat, j: &RMat) -> Result<Vec<RMat>> {
    let k = q.ncols();
    if !k.is_multiple_of(2) {
        return Err(Error::Structure(format!("J-invariant subspace has odd real dimension {k}")));
    }
    let d = q.nrows();
    let mut span: Vec<RMat> = vec![];
    let mut xs = vec![];
    for col in 0..k {
        let mut v = q.column(col).into_owned();
        for _ in 0..2 {
            for s in &span {
                let dot = (s.transpose() * &v)[(0, 0)];
                v -= s * dot;
            }
        }
        let norm = v.norm();
        if norm < 1e-6 {
            continue;
        }
        let x = RMat::from_column_slice(d, 1, (v / norm).as_slice());
        let jx = j * &x;
        span.push(x.clone());
        span.push(jx);
        xs.push(x);
        if span.len() == k {
            break;
        }
    }
    if span.len() != k {
        return Err(Error::Structure("subspace is not J-invariant".into()));
    }
    Ok(xs)
}

/// Real Hermitian algebra realizing given structure constants and frame metric.
///
/// Uses the real basis `b_{2k} = (e_k + ē_k)/√2`, `b_{2k+1} = i(e_k − ē_k)/√2`,
/// so that `e_k = (b_{2k} − i b_{2k+1})/√2` and `J` is standard.
#[derive(Debug, Clone)]
pub struct Realization {
    pub hermitian: HermitianAlgebra,
    pub frame: Frame,
}

pub fn realify(sc: &StructureConstants, g: Option<&CMat>, cfg: &Config) -> Result<Realization> {
    let n = sc.n();
    let d = 2 * n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // columns: real basis vectors b_m in {e, ē} coordinates
    let basis = CMat::from_fn(d, d, |row, m| {
        let k = m / 2;
        let is_im = m % 2 == 1;
        match (row == k, row == n + k, is_im) {
            (true, _, false) => c(s, 0.0),
            (_, true, false) => c(s, 0.0),
            (true, _, true) => c(0.0, s),
            (_, true, true) => c(0.0, -s),
            _ => c(0.0, 0.0),
        }
    });
    let table = sc.bracket_table();
    let bracket_ee = |u: &CVec, v: &CVec| -> CVec {
        let mut out = CVec::zeros(d);
        for a in 0..d {
            if u[a].norm() == 0.0 {
                continue;
            }
            for b in 0..d {
                let w = u[a] * v[b];
                if w.norm() == 0.0 {
                    continue;
                }
                out += &table[a * d + b] * w;
            }
        }
        out
    };
    let mut f = vec![0.0; d * d * d];
    let mut imag_leak: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let w = bracket_ee(&basis.column(a).into_owned(), &basis.column(b).into_owned());
            for k in 0..n {
                let re_part = (w[k] + w[n + k]) * s;
                let im_part = (w[k] * c(0.0, -1.0) + w[n + k] * c(0.0, 1.0)) * s;
                imag_leak = imag_leak.max(re_part.im.abs()).max(im_part.im.abs());
                f[(2 * k * d + a) * d + b] = re_part.re;
                f[((2 * k + 1) * d + a) * d + b] = im_part.re;
            }
        }
    }
    debug_assert!(imag_leak < 1e-9 * (1.0 + sc.max_abs()), "realification produced complex bracket");
    let alg = RealLieAlgebra::from_dense(d, f)?;
    let j = ComplexStructure::standard(d)?;
    let e = CMat::from_fn(d, n, |row, k| {
        if row == 2 * k {
            c(s, 0.0)
        } else if row == 2 * k + 1 {
            c(0.0, -s)
        } else {
            c(0.0, 0.0)
        }
    });
    let frame = Frame::new(e, &j, cfg)?;
    let gm = match g {
        Some(g) => g.clone(),
        None => CMat::identity(n, n),
    };
    // ⟨b_{2k}, b_{2l}⟩ = Re g_{kl̄}, ⟨b_{2k}, b_{2l+1}⟩ = Im g_{kl̄}, ⟨b_{2k+1}, b_{2l+1}⟩ = Re g_{kl̄}
    let greal = RMat::from_fn(d, d, |a, b| {
        let (k, l) = (a / 2, b / 2);
        let z = gm[(k, l)];
        match (a % 2, b % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => z.im,
            _ => -z.im,
        }
    });
    let metric = CompatibleMetric::new(greal)?;
    Ok(Realization { hermitian: HermitianAlgebra::new(alg, j, metric)?, frame })
}
