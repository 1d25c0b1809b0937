use hermlie_core::linalg::{self, c, CMat};
use hermlie_core::samples::{random_frame_metric, random_invertible, random_jacobi_constants};
use hermlie_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 3;

fn form(n: usize) -> impl Strategy<Value = InvariantForm> {
    prop::collection::vec((0u64..(1 << (2 * n)), -1.0f64..1.0, -1.0f64..1.0), 0..6).prop_map(move |terms| {
        let mut f = InvariantForm::zero(n);
        for (mask, re, im) in terms {
            f.add_term(mask, c(re, im));
        }
        f
    })
}

fn degree_part(f: &InvariantForm, degree: usize) -> InvariantForm {
    let mut out = InvariantForm::zero(f.n());
    for (mask, z) in f.terms() {
        if mask.count_ones() as usize == degree {
            out.add_term(mask, z);
        }
    }
    out
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wedge_is_associative(a in form(N), b in form(N), d in form(N)) {
        let left = a.wedge(&b).wedge(&d);
        let right = a.wedge(&b.wedge(&d));
        prop_assert!(left.distance(&right) < 1e-12);
    }

    #[test]
    fn wedge_is_graded_commutative(p in 0usize..4, q in 0usize..4, a in form(N), b in form(N)) {
        let (a, b) = (degree_part(&a, p), degree_part(&b, q));
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(a.wedge(&b).distance(&(&b.wedge(&a) * c(sign, 0.0))) < 1e-12);
    }

    #[test]
    fn conjugation_is_an_involution(a in form(N)) {
        prop_assert!(a.conj().conj().distance(&a) < 1e-15);
    }

    #[test]
    fn type_components_sum_to_the_form(a in form(N)) {
        let mut sum = InvariantForm::zero(N);
        for (p, q) in a.types() {
            sum = &sum + &a.type_component(p, q);
        }
        prop_assert!(sum.distance(&a) < 1e-15);
    }

    #[test]
    fn d_squares_to_zero(seed in any::<u64>(), a in form(N)) {
        let mut r = rng(seed);
        let sc = loop {
            let sc = random_jacobi_constants(N, &mut r);
            if sc.n() == N {
                break sc;
            }
        };
        let d = Differential::new(&sc);
        prop_assert!(d.apply(&d.apply(&a)).sup_norm() < 1e-10);
    }

    #[test]
    fn d_is_a_graded_derivation(seed in any::<u64>(), p in 0usize..3, a in form(N), b in form(N)) {
        let mut r = rng(seed);
        let sc = loop {
            let sc = random_jacobi_constants(N, &mut r);
            if sc.n() == N {
                break sc;
            }
        };
        let a = degree_part(&a, p);
        let d = Differential::new(&sc);
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = d.apply(&a.wedge(&b));
        let rhs = &d.apply(&a).wedge(&b) + &(&a.wedge(&d.apply(&b)) * c(sign, 0.0));
        prop_assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn frame_changes_compose(seed in any::<u64>()) {
        let cfg = Config::default();
        let mut r = rng(seed);
        let sc = random_jacobi_constants(4, &mut r);
        let n = sc.n();
        let a = random_invertible(n, &mut r);
        let b = random_invertible(n, &mut r);
        let two_steps = sc.change_frame(&a, &cfg).unwrap().change_frame(&b, &cfg).unwrap();
        let one_step = sc.change_frame(&(&a * &b), &cfg).unwrap();
        prop_assert!(two_steps.max_abs_diff(&one_step) < 1e-9);
    }

    #[test]
    fn hs_decision_is_frame_independent(seed in any::<u64>()) {
        let cfg = Config::default();
        let mut r = rng(seed);
        let (sc, g) = if seed % 2 == 0 {
            let inst = random_family(1 + (seed as usize / 2) % 2, 4, seed).unwrap();
            (inst.constants, inst.metric)
        } else {
            let sc = random_jacobi_constants(4, &mut r);
            let g = FrameMetric::new(random_frame_metric(sc.n(), &mut r)).unwrap();
            (sc, g)
        };
        let a = random_invertible(sc.n(), &mut r);
        let before = hs_compatibility(&sc, &g, &cfg).unwrap();
        let after = hs_compatibility(&sc.change_frame(&a, &cfg).unwrap(), &g.change_frame(&a, &cfg).unwrap(), &cfg).unwrap();
        prop_assert_eq!(before.feasible, after.feasible);
    }

    #[test]
    fn kahler_form_is_real_and_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = FrameMetric::new(random_frame_metric(N, &mut r)).unwrap();
        let w = g.kahler_form();
        prop_assert!(w.conj().distance(&w) < 1e-14);
        prop_assert!(exterior::positivity_11(&w).unwrap());
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sc = random_jacobi_constants(4, &mut r);
        let g = FrameMetric::new(random_frame_metric(sc.n(), &mut r)).unwrap();
        let s = CMat::zeros(sc.n(), sc.n());
        let doc = AlgebraDocument::from_constants("p", &sc, &g, Some(&s));
        let loaded = AlgebraDocument::parse(&doc.to_json()).unwrap().resolve().unwrap();
        let Resolved::Complex { constants, metric } = &loaded.resolved else { panic!("complex document") };
        prop_assert!(constants.max_abs_diff(&sc) == 0.0);
        prop_assert!(linalg::max_abs(&(metric.matrix() - g.matrix())) < 1e-15);
    }
}
