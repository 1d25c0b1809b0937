//! Acceptance criteria. Prints one PASS/FAIL line per criterion, then fails if any line failed.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use hermlie_core::linalg::{self, CMat, CVec};
use hermlie_core::samples::{self, random_frame_metric, random_invertible, random_jacobi_constants};
use hermlie_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name, check and optional runtime budget.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome { pass, detail, elapsed: t.elapsed() }
}

fn catalog_docs() -> Vec<(String, LoadedDocument)> {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "catalog"].iter().collect();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("catalog directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| (p.display().to_string(), load(&p).expect("catalog documents load"))).collect()
}

fn criterion1() -> Outcome {
    timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst_valid: f64 = 0.0;
        for _ in 0..200 {
            let sc = random_jacobi_constants(5, &mut rng);
            worst_valid = worst_valid.max(Differential::new(&sc).dd_residual());
        }
        let mut best_broken = f64::INFINITY;
        let mut count = 0;
        while count < 200 {
            let base = random_jacobi_constants(5, &mut rng);
            let size = rng.random_range(0.05..1.0);
            let sc = samples::perturb(&base, size, &mut rng);
            // a perturbation can land on another Lie algebra; only violating ones count
            if sc.bianchi_residual() <= 1e-3 {
                continue;
            }
            count += 1;
            best_broken = best_broken.min(Differential::new(&sc).dd_residual());
        }
        (
            worst_valid <= 1e-9 && best_broken > 1e-4,
            format!("max dd on 200 Lie algebras {worst_valid:.2e} ≤ 1e-9, min dd on 200 violating perturbations {best_broken:.2e} > 1e-4"),
        )
    })
}

fn criterion2() -> Outcome {
    timed(|| {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut unitary_err: f64 = 0.0;
        let mut tensor_err: f64 = 0.0;
        for _ in 0..100 {
            let sc = random_jacobi_constants(5, &mut rng);
            let n = sc.n();
            let t = chern_torsion(&sc, &FrameMetric::identity(n), &cfg).unwrap();
            let expected = Tensor3::from_fn(n, |j, i, k| sc.d(j, k, i) - sc.d(j, i, k) - sc.c(j, i, k));
            unitary_err = unitary_err.max(t.max_abs_diff(&expected));

            let g = FrameMetric::new(random_frame_metric(n, &mut rng)).unwrap();
            let a = random_invertible(n, &mut rng);
            let t0 = chern_torsion(&sc, &g, &cfg).unwrap();
            let t1 = chern_torsion(&sc.change_frame(&a, &cfg).unwrap(), &g.change_frame(&a, &cfg).unwrap(), &cfg).unwrap();
            let ainv = a.clone().try_inverse().unwrap();
            tensor_err = tensor_err.max(t1.max_abs_diff(&t0.transform(&a.transpose(), &ainv, &ainv)));
        }
        (
            unitary_err <= 1e-12 && tensor_err <= 1e-9,
            format!("unitary reduction error {unitary_err:.2e} ≤ 1e-12, tensoriality error {tensor_err:.2e} ≤ 1e-9 (100 instances each)"),
        )
    })
}

fn criterion3() -> Outcome {
    timed(|| {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut feasible = 0;
        let mut counterexamples = 0;
        let mut tally = |sc: &StructureConstants, g: &FrameMetric| {
            let sol = hs_compatibility(sc, g, &cfg).unwrap();
            if sol.feasible {
                feasible += 1;
                if !metric_checks(sc, g, &cfg).pluriclosed.pass {
                    counterexamples += 1;
                }
            }
        };
        for k in 0..50u64 {
            let r = 1 + (k as usize) % 3;
            let n = rng.random_range(2 * r..=6);
            let inst = random_family(r, n, 1000 + k).unwrap();
            tally(&inst.constants, &inst.metric);
            let a = random_invertible(n, &mut rng);
            tally(&inst.constants.change_frame(&a, &cfg).unwrap(), &inst.metric.change_frame(&a, &cfg).unwrap());
        }
        for _ in 0..200 {
            let sc = random_jacobi_constants(4, &mut rng);
            tally(&sc, &FrameMetric::identity(sc.n()));
            tally(&sc, &FrameMetric::new(random_frame_metric(sc.n(), &mut rng)).unwrap());
        }
        let mut catalog_feasible = 0;
        for (name, doc) in catalog_docs() {
            let rep = analyze(&doc, &cfg);
            let hs = rep.get("hs.decide").map(|c| c.status);
            if hs == Some(Status::Pass) {
                catalog_feasible += 1;
                if rep.get("metric.pluriclosed").map(|c| c.status) != Some(Status::Pass) {
                    eprintln!("counterexample: {name}");
                    counterexamples += 1;
                }
            }
        }
        (
            counterexamples == 0 && feasible > 0 && catalog_feasible > 0,
            format!("{counterexamples} counterexamples among {feasible} feasible generated/random instances and {catalog_feasible} feasible catalog documents"),
        )
    })
}

fn criterion4() -> Outcome {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "catalog", "kodaira_thurston.json"].iter().collect();
    let doc = load(&dir).unwrap();
    timed(|| {
        let cfg = Config::default();
        let Resolved::Complex { constants, metric } = &doc.resolved else { return (false, "catalog KT must be complex".into()) };
        let mc = metric_checks(constants, metric, &cfg);
        let sol = hs_compatibility(constants, metric, &cfg).unwrap();
        let (h, _) = doc.hermitian(&cfg).unwrap();
        let dec = build_admissible_frame(&h, &cfg).unwrap();
        let restr = verify_restrictions(dec.shape, &dec.constants, &cfg);
        let pass = mc.pluriclosed.pass && !mc.kahler.pass && !sol.feasible && sol.residual >= 0.3 && !restr.restriction2.pass;
        (
            pass,
            format!(
                "pluriclosed {}, Kähler {}, HS residual {:.4} ≥ 0.3, restriction2 residual {:.3}",
                mc.pluriclosed.pass, mc.kahler.pass, sol.residual, restr.restriction2.residual
            ),
        )
    })
}

#[derive(Default)]
struct Worst {
    hs: f64,
    restrictions: f64,
    c_blocks: f64,
    d_blocks: f64,
    claims: f64,
    d_omega: f64,
    p: f64,
    lambda: f64,
}

fn family_run(inst: &FamilyInstance, cfg: &Config, w: &mut Worst) -> Result<()> {
    let doc = AlgebraDocument::from_family("acceptance", inst, None).resolve()?;
    let (h, _) = doc.hermitian(cfg)?;
    let dec = build_admissible_frame(&h, cfg)?;
    let sol = hs_compatibility(&dec.constants, &dec.metric, cfg)?;
    if !sol.feasible {
        return Err(Error::Precondition("family instance judged infeasible".into()));
    }
    w.hs = w.hs.max(sol.residual);
    let restr = verify_restrictions(dec.shape, &dec.constants, cfg);
    w.restrictions = w.restrictions.max(restr.restriction1.max_residual()).max(restr.restriction2.residual);
    let bd = extract_blocks(dec.shape, &dec.constants, Some(&sol.s))?;
    w.c_blocks = w.c_blocks.max(verify_bianchi_blocks(&bd, cfg).max_residual());
    w.d_blocks = w.d_blocks.max(verify_hs_blocks(&bd, cfg)?.max_residual());
    let claims = claims_pipeline(dec.shape, &dec.constants, &sol.s, cfg)?;
    for (k, v) in &claims.residuals {
        if k != "t_independence" {
            w.claims = w.claims.max(*v);
        }
    }
    let cert = kahlerize(dec.shape, &dec.constants, &sol.s, &dec.metric, cfg)?;
    w.d_omega = w.d_omega.max(cert.residuals["d_omega_tilde"]);
    w.p = w.p.max((&cert.p - &inst.p).iter().map(|z| z.norm()).fold(0.0, f64::max));
    w.lambda = w.lambda.max(linalg::max_abs(&(&cert.lambda - &inst.lambda)));
    Ok(())
}

fn criterion5() -> Outcome {
    timed(|| {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let mut w = Worst::default();
        let mut errors = vec![];
        for k in 0..50u64 {
            let r = 1 + (k as usize) % 3;
            let n = rng.random_range(2 * r..=6);
            let inst = random_family(r, n, 5000 + k).unwrap();
            if let Err(e) = family_run(&inst, &cfg, &mut w) {
                errors.push(format!("r = {r}, n = {n}: {e}"));
            }
        }
        let pass = errors.is_empty()
            && w.hs <= 1e-9
            && w.restrictions <= 1e-8
            && w.c_blocks <= 1e-8
            && w.d_blocks <= 1e-8
            && w.claims <= 1e-8
            && w.d_omega <= 1e-8
            && w.p <= 1e-9
            && w.lambda <= 1e-9;
        let mut detail = format!(
            "50 instances: HS {:.1e} ≤ 1e-9, restrictions {:.1e}, C1–C7 {:.1e}, D1–D8 {:.1e}, claims {:.1e} (≤ 1e-8), dω̃ {:.1e} ≤ 1e-8, p {:.1e}, λ {:.1e} (≤ 1e-9)",
            w.hs, w.restrictions, w.c_blocks, w.d_blocks, w.claims, w.d_omega, w.p, w.lambda
        );
        if !errors.is_empty() {
            detail.push_str(&format!("; errors: {}", errors.join("; ")));
        }
        (pass, detail)
    })
}

fn criterion6() -> Outcome {
    timed(|| {
        let cfg = Config::default();
        let torus = AlgebraDocument::from_constants("torus", &samples::torus(3), &FrameMetric::identity(3), None).resolve().unwrap();
        let rep = analyze(&torus, &cfg);
        let s_zero = rep.results["S"]
            .as_array()
            .is_some_and(|rows| rows.iter().flat_map(|row| row.as_array().unwrap()).all(|z| z[0] == 0.0 && z[1] == 0.0));
        let torus_ok = rep.verdict == "Kähler" && s_zero;
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let mut psi_err: f64 = 0.0;
        let mut all_kahler = true;
        for k in 0..10 {
            let r = 1 + k % 3;
            let n = 2 * r + k % 2;
            let lambda = samples::random_complex(n - r, r, &mut rng);
            let inst = generate_family(r, n, &lambda, &CVec::zeros(r)).unwrap();
            all_kahler &= metric_checks(&inst.constants, &inst.metric, &cfg).kahler.pass;
            let cert = kahlerize(BlockShape { r, s: r, n }, &inst.constants, &inst.s, &inst.metric, &cfg).unwrap();
            psi_err = psi_err.max(linalg::max_abs(&(&cert.psi_coeffs - CMat::identity(n, n))));
        }
        (
            torus_ok && all_kahler && psi_err <= 1e-12,
            format!("torus verdict \"{}\" with S = 0: {torus_ok}; 10 p = 0 instances Kähler: {all_kahler}, max |ψ − φ| {psi_err:.1e}", rep.verdict),
        )
    })
}

fn criterion7() -> Outcome {
    timed(|| {
        let cfg = Config { seed: 7, ..Config::default() };
        let mut same = true;
        for (_, doc) in catalog_docs() {
            same &= analyze(&doc, &cfg).to_json() == analyze(&doc, &cfg).to_json();
            same &= verify_claims_report(&doc, &cfg).to_json() == verify_claims_report(&doc, &cfg).to_json();
        }
        let gen = |seed| AlgebraDocument::from_family("f", &random_family(2, 5, seed).unwrap(), Some(seed)).to_json();
        same &= gen(3) == gen(3);
        let kt = samples::kodaira_thurston();
        let a = hs_metric_search(&kt, 2, 9, &cfg);
        let b = hs_metric_search(&kt, 2, 9, &cfg);
        same &= a.best_residual.to_bits() == b.best_residual.to_bits() && a.best_g.matrix() == b.best_g.matrix();
        (same, "catalog reports, generated documents and metric search repeat byte for byte".into())
    })
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("1 calculus soundness", criterion1, Some(Duration::from_secs(10))),
        ("2 torsion correctness", criterion2, None),
        ("3 HS implies pluriclosed", criterion3, None),
        ("4 negative control (Kodaira–Thurston)", criterion4, Some(Duration::from_millis(100))),
        ("5 positive control (family)", criterion5, Some(Duration::from_secs(30))),
        ("6 trivial fixed points", criterion6, None),
        ("7 determinism", criterion7, None),
    ];
    let mut failed = vec![];
    for (name, run, budget) in criteria {
        let out = run();
        let in_time = budget.is_none_or(|b| out.elapsed < b);
        let pass = out.pass && in_time;
        let time = match budget {
            Some(b) => format!("{:.3} s < {:.3} s", out.elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.3} s", out.elapsed.as_secs_f64()),
        };
        println!("{} criterion {name}: {} [{time}]", if pass { "PASS" } else { "FAIL" }, out.detail);
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn family_sampling_covers_all_ranks() {
    for r in 1..=3 {
        assert!(random_family(r, 2 * r, 1).is_ok());
        assert!(random_family(r, 2 * r - 1, 1).is_err());
    }
}
