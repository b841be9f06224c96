mod common;

use common::oracle::{self, LpValue};
use common::{along, dot, in_cone, norm};
use conicsens::sensitivity::{range_test_residual, Analyzer};
use conicsens::solver::{self, certify_strict_dual, certify_strict_primal};
use conicsens::{io, Cone64, ConicProgram64, ExtReal, Matrix64, Settings64, Status};
use proptest::prelude::*;
use rand::Rng;

fn settings() -> Settings64 {
    Settings64::default()
}

fn scale(v: f64) -> f64 {
    1.0 + v.abs()
}

fn finite(v: ExtReal<f64>) -> f64 {
    v.finite().unwrap_or_else(|| panic!("expected a finite value, got {v}"))
}

fn instance(seed: u64, polyhedral: bool) -> (ConicProgram64, rand_chacha::ChaCha8Rng) {
    let mut rng = common::rng(seed);
    let p = if polyhedral {
        common::polyhedral_instance(&mut rng)
    } else {
        common::symmetric_instance(&mut rng)
    };
    (p, rng)
}

#[test]
fn oracle_on_textbook_lp() {
    // min x + y  s.t. x ≥ 1, y ≥ 2, x + y ≥ 4
    let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let b = [1.0, 2.0, 4.0];
    match oracle::lp_min(&a, &b, &[1.0, 1.0]) {
        LpValue::Optimal { value, y, .. } => {
            assert!((value - 4.0).abs() < 1e-12);
            assert!((dot(&b, &y) - 4.0).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(oracle::lp_min(&a, &b, &[-1.0, 1.0]), LpValue::Unbounded);
    let a = vec![vec![1.0], vec![-1.0]];
    assert_eq!(oracle::lp_min(&a, &[1.0, 1.0], &[1.0]), LpValue::Infeasible);
}

#[test]
fn single_precision_solves_soc_example() {
    let p: conicsens::ConicProgram32 = common::soc_unique_dual().cast();
    let sol = solver::solve(&p, &conicsens::Settings32::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.value.finite().unwrap() - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weak_duality_between_witnesses(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, _) = instance(seed, poly);
        let st = settings();
        let x = certify_strict_primal(&p, &st).unwrap().witness.unwrap();
        let y = certify_strict_dual(&p, &st).unwrap().witness.unwrap();
        let gap = p.objective(&x) - dot(p.b(), &y);
        prop_assert!(gap >= -1e-6 * (1.0 + norm(p.c()) * norm(&x)), "cᵀx − bᵀy = {gap}");
    }

    #[test]
    fn reduction_preserves_value_and_duals(seed in any::<u64>()) {
        let (p, _) = instance(seed, true);
        let st = settings();
        let reduced = p.reduce_polyhedral().unwrap();
        let low = p.lower().unwrap();
        prop_assert_eq!(&reduced, &low.program);
        let sol = solver::solve(&reduced, &st).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        let v = finite(sol.value);
        let y_low = sol.y_opt.as_ref().unwrap();
        prop_assert!(in_cone(reduced.cone(), y_low, 1e-7 * scale(norm(y_low))));
        let y = low.lift_dual(y_low);
        let aty = p.a().tr_matvec(&y);
        prop_assert!(norm(&along(&aty, -1.0, p.c())) <= 1e-6 * (1.0 + norm(p.c())));
        prop_assert!((dot(p.b(), &y) - v).abs() <= 1e-6 * scale(v));
        prop_assert!((oracle::psi(&p, p.c()).value() - v).abs() <= 1e-6 * scale(v));
    }

    #[test]
    fn solver_agrees_with_oracle_on_arbitrary_data(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, true);
        // random b and c: any of the three outcomes
        let b: Vec<f64> = common::gauss(&mut rng, p.m()).iter().map(|v| 3.0 * v).collect();
        let c = common::gauss(&mut rng, p.n());
        let q = p.with_b(b).unwrap().with_c(c).unwrap();
        let (a_rows, rhs) = oracle::as_inequalities(&q);
        let expected = oracle::lp_min(&a_rows, &rhs, q.c());
        let sol = solver::solve(&q.lower().unwrap().program, &settings()).unwrap();
        match expected {
            LpValue::Infeasible => prop_assert_eq!(sol.status, Status::PrimalInfeasible),
            LpValue::Unbounded => prop_assert_eq!(sol.status, Status::Unbounded),
            LpValue::Optimal { value, .. } => {
                prop_assert_eq!(sol.status, Status::Optimal);
                prop_assert!((finite(sol.value) - value).abs() <= 1e-6 * scale(value));
            }
        }
    }

    #[test]
    fn strong_duality_under_strict_feasibility(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, _) = instance(seed, poly);
        let low = p.lower().unwrap();
        let sol = solver::solve(&low.program, &settings()).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        let v = finite(sol.value);
        let y = sol.y_opt.unwrap();
        prop_assert!((dot(low.program.b(), &y) - v).abs() <= 1e-7 * scale(v));
        prop_assert!(in_cone(&low.program.cone().dual(), &y, 1e-7 * scale(norm(&y))));
    }

    #[test]
    fn level_sets_are_nested(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, mut rng) = instance(seed, poly);
        let d = common::gauss(&mut rng, p.m());
        let h = common::gauss(&mut rng, p.n());
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let t = 0.1;
        let rb = an.phi_increment_bounds(&d, t).unwrap();
        prop_assert!(rb.lower_slope <= rb.upper_slope.checked_add(ExtReal::Finite(1e-6 * scale(v))).unwrap());
        let cb = an.psi_increment_bounds(&h, t).unwrap();
        prop_assert!(cb.lower_slope <= cb.upper_slope.checked_add(ExtReal::Finite(1e-6 * scale(v))).unwrap());
    }

    #[test]
    fn increments_are_sandwiched(seed in any::<u64>(), poly in any::<bool>(), t in 0.01f64..0.5) {
        let (p, mut rng) = instance(seed, poly);
        let d = common::gauss(&mut rng, p.m());
        let h = common::gauss(&mut rng, p.n());
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let slack = ExtReal::Finite(1e-6 * scale(v));
        let rb = an.phi_increment_bounds(&d, t).unwrap();
        if rb.valid {
            let at = an.phi(&along(p.b(), t, &d)).unwrap();
            prop_assert!(rb.lower <= at.checked_add(slack).unwrap(), "{} ≤ {}", rb.lower, at);
            prop_assert!(at <= rb.upper.checked_add(slack).unwrap(), "{} ≤ {}", at, rb.upper);
        }
        let cb = an.psi_increment_bounds(&h, t).unwrap();
        let at = an.psi(&along(p.c(), t, &h)).unwrap();
        prop_assert!(cb.lower <= at.checked_add(slack).unwrap(), "{} ≤ {}", cb.lower, at);
        prop_assert!(at <= cb.upper.checked_add(slack).unwrap(), "{} ≤ {}", at, cb.upper);
    }

    #[test]
    fn derivative_bounds_difference_quotients(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, mut rng) = instance(seed, poly);
        let d = common::gauss(&mut rng, p.m());
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let deriv = finite(an.phi_dir_deriv(&d).unwrap());
        for t in [1.0, 0.1, 0.01] {
            let q = an.phi(&along(p.b(), t, &d)).unwrap();
            if let ExtReal::Finite(q) = q {
                prop_assert!(deriv <= (q - v) / t + 1e-6 * scale(v) / t, "t={t}");
            }
        }
    }

    #[test]
    fn derivatives_are_positively_homogeneous(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, mut rng) = instance(seed, poly);
        let d = common::gauss(&mut rng, p.m());
        let h = common::gauss(&mut rng, p.n());
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let base_phi = finite(an.phi_dir_deriv(&d).unwrap());
        let base_psi = an.psi_dir_deriv(&h).unwrap();
        for lambda in [0.5, 2.0] {
            let scaled: Vec<f64> = d.iter().map(|x| lambda * x).collect();
            let got = finite(an.phi_dir_deriv(&scaled).unwrap());
            prop_assert!((got - lambda * base_phi).abs() <= 1e-5 * scale(v));
            let scaled: Vec<f64> = h.iter().map(|x| lambda * x).collect();
            let got = an.psi_dir_deriv(&scaled).unwrap();
            match (got, base_psi) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => prop_assert!((a - lambda * b).abs() <= 1e-5 * scale(v)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn dual_solutions_are_subgradients(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, mut rng) = instance(seed, poly);
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let low = p.lower().unwrap();
        let y = low.lift_dual(an.base().unwrap().y_opt.as_ref().unwrap());
        prop_assert!(an.phi_subdiff_contains(&y, 1e-6).unwrap());
        for _ in 0..20 {
            let step: Vec<f64> = common::gauss(&mut rng, p.m()).iter().map(|x| x * rng.gen_range(0.01..1.0)).collect();
            let b2 = along(p.b(), 1.0, &step);
            if let ExtReal::Finite(w) = an.phi(&b2).unwrap() {
                prop_assert!(w - v >= dot(&y, &step) - 1e-6 * scale(v), "{} vs {}", w - v, dot(&y, &step));
            }
        }
    }

    #[test]
    fn phi_is_convex_and_psi_concave(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, mut rng) = instance(seed, poly);
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = finite(an.base_value().unwrap());
        let tol = 1e-6 * scale(v);
        let b1 = along(p.b(), 0.3, &common::gauss(&mut rng, p.m()));
        let b2 = along(p.b(), 0.3, &common::gauss(&mut rng, p.m()));
        let c1 = along(p.c(), 0.3, &common::gauss(&mut rng, p.n()));
        let c2 = along(p.c(), 0.3, &common::gauss(&mut rng, p.n()));
        let (f1, f2) = (an.phi(&b1).unwrap(), an.phi(&b2).unwrap());
        let (g1, g2) = (an.psi(&c1).unwrap(), an.psi(&c2).unwrap());
        for lambda in [0.25, 0.5, 0.75] {
            let mix = |u: &[f64], w: &[f64]| -> Vec<f64> {
                u.iter().zip(w).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
            };
            if let (ExtReal::Finite(f1), ExtReal::Finite(f2)) = (f1, f2) {
                let fm = an.phi(&mix(&b1, &b2)).unwrap();
                prop_assert!(fm <= ExtReal::Finite(lambda * f1 + (1.0 - lambda) * f2 + tol));
            }
            if let (ExtReal::Finite(g1), ExtReal::Finite(g2)) = (g1, g2) {
                let gm = an.psi(&mix(&c1, &c2)).unwrap();
                prop_assert!(gm >= ExtReal::Finite(lambda * g1 + (1.0 - lambda) * g2 - tol));
            }
        }
    }

    #[test]
    fn polyhedral_increments_are_exact(seed in any::<u64>()) {
        let (p, mut rng) = instance(seed, true);
        let d = common::gauss(&mut rng, p.m());
        let an = Analyzer::new(&p, settings()).unwrap();
        let v = oracle::psi(&p, p.c()).value();
        let ex = an.phi_increment_exact_polyhedral(&d).unwrap();
        let slope = finite(ex.slope);
        let tau = ex.tau.unwrap();
        for k in [1.0, 0.3, 0.01] {
            let t = k * tau;
            let exact = oracle::phi(&p, &along(p.b(), t, &d)).value();
            prop_assert!((exact - (v + t * slope)).abs() <= 1e-6 * scale(v));
        }
    }

    #[test]
    fn psi_is_minus_infinity_off_the_range(seed in any::<u64>()) {
        // a dead variable: A gets a zero column, c a zero entry
        let (p, mut rng) = instance(seed, false);
        let (m, n) = (p.m(), p.n());
        let a = Matrix64::from_fn(m, n + 1, |i, j| if j < n { p.a().row(i)[j] } else { 0.0 });
        let mut c = p.c().to_vec();
        c.push(0.0);
        let q = ConicProgram64::new(a, p.b().to_vec(), c, p.cone().clone()).unwrap();
        let mut h = common::gauss(&mut rng, n + 1);
        h[n] = if h[n] >= 0.0 { h[n] + 0.5 } else { h[n] - 0.5 };
        prop_assert!(range_test_residual(&q, &h) > 1e-8);
        let an = Analyzer::new(&q, settings()).unwrap();
        prop_assert!(an.strict_primal().unwrap().strictly_feasible);
        prop_assert!(an.strict_dual().unwrap().strictly_feasible);
        prop_assert_eq!(an.psi_dir_deriv(&h).unwrap(), ExtReal::MinusInf);
        for t in [0.1, -0.1] {
            prop_assert_eq!(an.psi(&along(q.c(), t, &h)).unwrap(), ExtReal::MinusInf);
        }
    }

    #[test]
    fn documents_round_trip_bit_for_bit(seed in any::<u64>(), poly in any::<bool>()) {
        let (p, _) = instance(seed, poly);
        let text = io::serialize_problem(&p);
        let back: ConicProgram64 = io::parse_problem(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(io::serialize_problem(&back), text);
        let cone: Cone64 = io::parse_cone(&io::serialize_cone(p.cone())).unwrap();
        prop_assert_eq!(&cone, p.cone());
    }
}
