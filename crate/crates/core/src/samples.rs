//! Named algebras and seeded random instances used by tests, benches and the CLI catalog.

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{realify, HermitianAlgebra, StructureConstants};
use crate::config::Config;
use crate::error::Result;
use crate::kahler::random_family;
use crate::linalg::{c, CMat, RMat};

pub fn torus(n: usize) -> StructureConstants {
    StructureConstants::zeros(n)
}

/// `dφ_1 = 0`, `dφ_2 = φ_1∧φ̄_1`.
pub fn kodaira_thurston() -> StructureConstants {
    let mut sc = StructureConstants::zeros(2);
    sc.set_d(0, 1, 0, c(-1.0, 0.0));
    sc
}

/// Complex Heisenberg algebra `[e_1, e_2] = e_3` (a complex Lie algebra, so `D = 0`).
pub fn iwasawa() -> StructureConstants {
    let mut sc = StructureConstants::zeros(3);
    sc.set_c(2, 0, 1, c(1.0, 0.0));
    sc
}

/// Complex Lie algebra `[e_1, e_k] = μ_k e_k` for `k ≥ 2`.
pub fn complex_almost_abelian(mu: &[Complex64]) -> StructureConstants {
    let n = mu.len() + 1;
    let mut sc = StructureConstants::zeros(n);
    for (k, &m) in mu.iter().enumerate() {
        sc.set_c(k + 1, 0, k + 1, m);
    }
    sc
}

/// Direct sum, with the frame of `a` first.
pub fn direct_sum(a: &StructureConstants, b: &StructureConstants) -> StructureConstants {
    let (na, nb) = (a.n(), b.n());
    let mut sc = StructureConstants::zeros(na + nb);
    for (off, part) in [(0, a), (na, b)] {
        let m = part.n();
        for j in 0..m {
            for i in 0..m {
                for k in 0..m {
                    if i < k {
                        sc.set_c(off + j, off + i, off + k, part.c(j, i, k));
                    }
                    sc.set_d(off + j, off + i, off + k, part.d(j, i, k));
                }
            }
        }
    }
    sc
}

pub fn random_complex(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    random_complex(n, n, rng).qr().q()
}

/// Well-conditioned random change of frame `I + ½·M`, `M` with entries in the unit square.
pub fn random_invertible(n: usize, rng: &mut impl Rng) -> CMat {
    loop {
        let a = CMat::identity(n, n) + random_complex(n, n, rng) * c(0.5, 0.0);
        let sv = crate::linalg::singular_values(&a);
        if sv[n - 1] > 0.1 * sv[0] {
            return a;
        }
    }
}

/// Random Hermitian positive definite frame metric.
pub fn random_frame_metric(n: usize, rng: &mut impl Rng) -> CMat {
    let m = random_complex(n, n, rng);
    &m * m.adjoint() * c(0.5, 0.0) + CMat::identity(n, n)
}

/// Seeded structure constants satisfying Jacobi, in a random frame, with `n ≤ n_max`.
pub fn random_jacobi_constants(n_max: usize, rng: &mut impl Rng) -> StructureConstants {
    let n_max = n_max.max(2);
    let base = loop {
        let pick = rng.random_range(0..6);
        let sc = match pick {
            0 => {
                let n = rng.random_range(2..=n_max);
                let r = rng.random_range(1..=(n / 2));
                random_family(r, n, rng.random()).expect("valid family parameters").constants
            }
            1 => {
                let n = rng.random_range(2..=n_max);
                let mu: Vec<Complex64> = (0..n - 1).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                complex_almost_abelian(&mu)
            }
            2 => kodaira_thurston(),
            3 => iwasawa(),
            4 => direct_sum(&kodaira_thurston(), &torus(rng.random_range(1..=n_max - 2).max(1))),
            _ => {
                let fam = random_family(1, 2, rng.random()).expect("valid family parameters").constants;
                direct_sum(&fam, &kodaira_thurston())
            }
        };
        if sc.n() <= n_max {
            break sc;
        }
    };
    let a = random_invertible(base.n(), rng);
    base.change_frame(&a, &Config::default()).expect("well-conditioned change")
}

/// Changes one random entry of C or D by `size`.
pub fn perturb(sc: &StructureConstants, size: f64, rng: &mut impl Rng) -> StructureConstants {
    let n = sc.n();
    let mut out = sc.clone();
    let (j, i, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
    let delta = c(size, 0.0);
    if rng.random_bool(0.5) && i != k {
        out.set_c(j, i, k, sc.c(j, i, k) + delta);
    } else {
        out.set_d(j, i, k, sc.d(j, i, k) + delta);
    }
    out
}

/// Realizes `sc` with a random frame metric, then moves to a random real basis.
pub fn random_realization(sc: &StructureConstants, rng: &mut impl Rng) -> Result<HermitianAlgebra> {
    let g = random_frame_metric(sc.n(), rng);
    realization_in_random_basis(sc, &g, rng)
}

/// Realizes `sc` with frame metric `g`, then moves to a random real basis.
pub fn realization_in_random_basis(sc: &StructureConstants, g: &CMat, rng: &mut impl Rng) -> Result<HermitianAlgebra> {
    let cfg = Config::default();
    let real = realify(sc, Some(g), &cfg)?;
    let d = 2 * sc.n();
    let p = loop {
        let m = RMat::identity(d, d) + RMat::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        let sv = crate::linalg::singular_values(&crate::linalg::to_complex(&m));
        if sv[d - 1] > 0.1 * sv[0] {
            break m;
        }
    };
    real.hermitian.change_basis(&p)
}
