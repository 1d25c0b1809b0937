//! Left-invariant complex forms on a Lie algebra with complex structure.
//!
//! A monomial is a bitmask over the `2n` generators: bit `i` is `φ_i` and bit
//! `n + i` is `φ̄_i`, multiplied in increasing bit order.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::algebra::StructureConstants;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

const PRUNE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantForm {
    n: usize,
    terms: BTreeMap<u64, Complex64>,
}

/// Sign of moving the monomial `b` past `a` into sorted order, or `None` if they overlap.
fn wedge_sign(a: u64, b: u64) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        swaps += (a >> bit).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

fn bits(mask: u64) -> Vec<usize> {
    let mut out = vec![];
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

impl InvariantForm {
    pub fn zero(n: usize) -> Self {
        assert!(2 * n <= 64, "at most 32 complex dimensions are supported");
        Self { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, z: Complex64) -> Self {
        let mut f = Self::zero(n);
        f.add_term(0, z);
        f
    }

    /// `φ_i` for `g < n`, `φ̄_{g-n}` otherwise.
    pub fn generator(n: usize, g: usize) -> Self {
        let mut f = Self::zero(n);
        f.add_term(1u64 << g, Complex64::new(1.0, 0.0));
        f
    }

    pub fn phi(n: usize, i: usize) -> Self {
        Self::generator(n, i)
    }

    pub fn phibar(n: usize, i: usize) -> Self {
        Self::generator(n, n + i)
    }

    /// `coef · φ_P ∧ φ̄_Q` for index lists `P`, `Q` (any order; sign applied).
    pub fn monomial(n: usize, holo: &[usize], antiholo: &[usize], coef: Complex64) -> Self {
        let mut f = Self::scalar(n, coef);
        for &i in holo {
            f = f.wedge(&Self::phi(n, i));
        }
        for &i in antiholo {
            f = f.wedge(&Self::phibar(n, i));
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &z)| (m, z))
    }

    pub fn coefficient(&self, mask: u64) -> Complex64 {
        self.terms.get(&mask).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, mask: u64, z: Complex64) {
        let entry = self.terms.entry(mask).or_default();
        *entry += z;
        if entry.norm() <= PRUNE {
            self.terms.remove(&mask);
        }
    }

    pub fn bidegree(&self, mask: u64) -> (usize, usize) {
        let holo = (1u64 << self.n) - 1;
        ((mask & holo).count_ones() as usize, (mask >> self.n).count_ones() as usize)
    }

    /// The holomorphic and antiholomorphic index lists of a monomial.
    pub fn split_mask(&self, mask: u64) -> (Vec<usize>, Vec<usize>) {
        let all = bits(mask);
        let holo = all.iter().copied().filter(|&b| b < self.n).collect();
        let anti = all.iter().copied().filter(|&b| b >= self.n).map(|b| b - self.n).collect();
        (holo, anti)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (&a, &za) in &self.terms {
            for (&b, &zb) in &other.terms {
                if let Some(s) = wedge_sign(a, b) {
                    out.add_term(a | b, za * zb * s);
                }
            }
        }
        out
    }

    pub fn wedge_power(&self, k: usize) -> Self {
        let mut out = Self::scalar(self.n, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.wedge(self);
        }
        out
    }

    pub fn conj(&self) -> Self {
        let n = self.n;
        let holo = (1u64 << n) - 1;
        let mut out = Self::zero(n);
        for (&m, &z) in &self.terms {
            let p = m & holo;
            let q = m >> n;
            // conj(φ_P ∧ φ̄_Q) = φ̄_P ∧ φ_Q = (−1)^{|P||Q|} φ_Q ∧ φ̄_P
            let sign = if (p.count_ones() * q.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
            out.add_term(q | (p << n), z.conj() * sign);
        }
        out
    }

    pub fn type_component(&self, p: usize, q: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, &z) in &self.terms {
            if self.bidegree(m) == (p, q) {
                out.terms.insert(m, z);
            }
        }
        out
    }

    /// Bidegrees present, sorted.
    pub fn types(&self) -> Vec<(usize, usize)> {
        let mut t: Vec<_> = self.terms.keys().map(|&m| self.bidegree(m)).collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn homogeneous_type(&self) -> Option<(usize, usize)> {
        match self.types().as_slice() {
            [t] => Some(*t),
            _ => None,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).sup_norm()
    }

    /// Value on complex vectors given by their `{e, ē}` coordinates:
    /// a monomial `g_1 ∧ … ∧ g_k` evaluates to `det[g_a(X_b)]`.
    pub fn evaluate(&self, vectors: &[CVec]) -> Complex64 {
        let k = vectors.len();
        let mut total = Complex64::new(0.0, 0.0);
        for (&m, &z) in &self.terms {
            let gens = bits(m);
            if gens.len() != k {
                continue;
            }
            let mat = CMat::from_fn(k, k, |a, b| vectors[b][gens[a]]);
            total += z * if k == 0 { Complex64::new(1.0, 0.0) } else { mat.determinant() };
        }
        total
    }
}

impl Add for &InvariantForm {
    type Output = InvariantForm;
    fn add(self, rhs: &InvariantForm) -> InvariantForm {
        let mut out = self.clone();
        for (&m, &z) in &rhs.terms {
            out.add_term(m, z);
        }
        out
    }
}

impl Sub for &InvariantForm {
    type Output = InvariantForm;
    fn sub(self, rhs: &InvariantForm) -> InvariantForm {
        let mut out = self.clone();
        for (&m, &z) in &rhs.terms {
            out.add_term(m, -z);
        }
        out
    }
}

impl Neg for &InvariantForm {
    type Output = InvariantForm;
    fn neg(self) -> InvariantForm {
        self * Complex64::new(-1.0, 0.0)
    }
}

impl Mul<Complex64> for &InvariantForm {
    type Output = InvariantForm;
    fn mul(self, rhs: Complex64) -> InvariantForm {
        let mut out = InvariantForm::zero(self.n);
        for (&m, &z) in &self.terms {
            out.add_term(m, z * rhs);
        }
        out
    }
}

/// Exterior derivative of invariant forms, determined by its values on the coframe.
#[derive(Debug, Clone)]
pub struct Differential {
    n: usize,
    gens: Vec<InvariantForm>,
}

impl Differential {
    /// `dφ_i = −½ Σ C^i_{jk} φ_j∧φ_k − Σ conj(D^j_{ik}) φ_j∧φ̄_k`, `dφ̄_i = conj(dφ_i)`.
    pub fn new(sc: &StructureConstants) -> Self {
        let n = sc.n();
        let mut gens = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut f = InvariantForm::zero(n);
            for j in 0..n {
                for k in (j + 1)..n {
                    f.add_term((1u64 << j) | (1u64 << k), -sc.c(i, j, k));
                }
                for k in 0..n {
                    f.add_term((1u64 << j) | (1u64 << (n + k)), -sc.d(j, i, k).conj());
                }
            }
            gens.push(f);
        }
        for i in 0..n {
            let bar = gens[i].conj();
            gens.push(bar);
        }
        Self { n, gens }
    }

    pub fn of_generator(&self, g: usize) -> &InvariantForm {
        &self.gens[g]
    }

    pub fn apply(&self, form: &InvariantForm) -> InvariantForm {
        assert_eq!(form.n(), self.n);
        let mut out = InvariantForm::zero(self.n);
        for (mask, z) in form.terms() {
            let gens = bits(mask);
            let mut before = 0u64;
            for (t, &g) in gens.iter().enumerate() {
                let after = mask & !before & !(1u64 << g);
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                for (dm, dz) in self.gens[g].terms() {
                    let Some(s1) = wedge_sign(before, dm) else { continue };
                    let Some(s2) = wedge_sign(before | dm, after) else { continue };
                    out.add_term(before | dm | after, z * dz * (sign * s1 * s2));
                }
                before |= 1u64 << g;
            }
        }
        out
    }

    /// max over generators of |d(dφ_i)|, zero exactly when the constants satisfy Jacobi.
    pub fn dd_residual(&self) -> f64 {
        self.gens.iter().map(|g| self.apply(g).sup_norm()).fold(0.0, f64::max)
    }

    /// `(∂a, ∂̄a)` for a form of pure type.
    pub fn del_and_delbar(&self, a: &InvariantForm) -> Result<(InvariantForm, InvariantForm)> {
        if a.is_zero() {
            return Ok((InvariantForm::zero(self.n), InvariantForm::zero(self.n)));
        }
        let (p, q) = a
            .homogeneous_type()
            .ok_or_else(|| Error::Type(format!("form is not of pure type (types {:?})", a.types())))?;
        let da = self.apply(a);
        Ok((da.type_component(p + 1, q), da.type_component(p, q + 1)))
    }
}

/// Whether a real (1,1)-form `a = i Σ h_{jk̄} φ_j∧φ̄_k` has positive definite `h`.
pub fn positivity_11(a: &InvariantForm) -> Result<bool> {
    let n = a.n();
    if let Some(t) = a.homogeneous_type() {
        if t != (1, 1) {
            return Err(Error::Type(format!("expected a (1,1)-form, got type {t:?}")));
        }
    } else if !a.is_zero() {
        return Err(Error::Type("expected a (1,1)-form".into()));
    }
    let h = CMat::from_fn(n, n, |j, k| a.coefficient((1u64 << j) | (1u64 << (n + k))) * Complex64::new(0.0, -1.0));
    let scale = linalg::max_abs(&h).max(1.0);
    if linalg::max_abs(&(&h - h.adjoint())) > 1e-12 * scale {
        return Ok(false);
    }
    let (vals, _) = linalg::hermitian_eigen(&h);
    Ok(vals.first().is_some_and(|&v| v > 1e-12 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn wedge_is_graded_commutative() {
        let a = InvariantForm::phi(3, 0);
        let b = InvariantForm::phibar(3, 2);
        assert_eq!(a.wedge(&b), &b.wedge(&a) * c(-1.0, 0.0));
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn conj_of_mixed_monomial() {
        let f = InvariantForm::monomial(2, &[0], &[1], c(0.0, 1.0));
        let back = InvariantForm::monomial(2, &[1], &[0], c(0.0, 1.0));
        // conj(i φ_0∧φ̄_1) = −i φ̄_0∧φ_1 = i φ_1∧φ̄_0
        assert_eq!(f.conj(), back);
        assert_eq!(f.conj().conj(), f);
    }

    #[test]
    fn kodaira_thurston_differential() {
        // D^1_{21} = −1 in 1-based indices
        let mut sc = StructureConstants::zeros(2);
        sc.set_d(0, 1, 0, c(-1.0, 0.0));
        let d = Differential::new(&sc);
        let expected = InvariantForm::monomial(2, &[0], &[0], c(1.0, 0.0));
        assert_eq!(d.of_generator(1), &expected);
        assert!(d.of_generator(0).is_zero());
        assert!(d.dd_residual() < 1e-15);
    }

    #[test]
    fn positivity_of_standard_form() {
        let w = &InvariantForm::monomial(2, &[0], &[0], c(0.0, 1.0)) + &InvariantForm::monomial(2, &[1], &[1], c(0.0, 1.0));
        assert!(positivity_11(&w).unwrap());
        assert!(!positivity_11(&(&w * c(-1.0, 0.0))).unwrap());
        assert!(positivity_11(&InvariantForm::phi(2, 0)).is_err());
    }

    #[test]
    fn del_of_mixed_form_is_type_error() {
        let sc = StructureConstants::zeros(2);
        let d = Differential::new(&sc);
        let mixed = &InvariantForm::phi(2, 0) + &InvariantForm::phibar(2, 1);
        assert!(matches!(d.del_and_delbar(&mixed), Err(Error::Type(_))));
    }
}
