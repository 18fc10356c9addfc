use proptest::prelude::*;
use proptest::strategy::ValueTree;

use swlyap::exponent::{constant_control_exponent, lyapunov_exponent, CaseTag};
use swlyap::geometry::{
    adjoint_propagate, singular_data, switching_rate, switching_value, transversality_check,
    TRANSVERSALITY_TOL,
};
use swlyap::oracle::{commutator_trace_sq_direct, expm_taylor, relative_error};
use swlyap::periodic::{
    doubling_gap, doubling_gap_closed_form, phi, phi_closed_form, solve_switch_time,
    switching_residual, PeriodPair,
};
use swlyap::simulator::{propagate, propagate_with, ControlSchedule, Segment};
use swlyap::sl2::{
    expm, independence_test, trace_product, Mat2, Sl2Matrix, TraceInvariants, INDEPENDENCE_TOL,
};
use swlyap::Error;

fn sl2(range: f64) -> impl Strategy<Value = Sl2Matrix> {
    (-range..range, -range..range, -range..range).prop_map(|(h, e, f)| Sl2Matrix::new(h, e, f))
}

fn conj(p: &Mat2, m: &Sl2Matrix) -> Sl2Matrix {
    (*p * m.to_mat2() * p.inverse().unwrap()).traceless_part()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn commutator_identity(a in sl2(3.0), b in sl2(3.0)) {
        let inv = TraceInvariants::of(&a, &b);
        let direct = commutator_trace_sq_direct(&a, &b);
        let scale = inv.scale().powi(2);
        prop_assert!((inv.commutator_trace_sq() - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn trace_product_symmetric(a in sl2(3.0), b in sl2(3.0)) {
        let ab = (a.to_mat2() * b.to_mat2()).trace();
        let ba = (b.to_mat2() * a.to_mat2()).trace();
        prop_assert!((ab - ba).abs() <= 1e-13 * (1.0 + ab.abs()));
        prop_assert!((trace_product(&a, &b) - ab).abs() <= 1e-13 * (1.0 + ab.abs()));
    }

    #[test]
    fn expm_group_law_and_det(m in sl2(2.0), t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let e = expm(&m, t).unwrap() * expm(&m, s).unwrap();
        let direct = expm(&m, t + s).unwrap();
        prop_assert!(relative_error(&e, &direct) < 1e-12);
        if ((t + s) * m).to_mat2().frobenius() <= 10.0 {
            prop_assert!((direct.det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn expm_matches_taylor(m in sl2(3.0), t in -3.0f64..3.0) {
        let e = expm(&m, t).unwrap();
        let oracle = expm_taylor(&m.to_mat2(), t);
        prop_assert!(relative_error(&e, &oracle) < 1e-8);
    }

    #[test]
    fn exponent_swap_invariant(a in sl2(2.0), b in sl2(2.0)) {
        let (r1, r2) = match (lyapunov_exponent(&a, &b), lyapunov_exponent(&b, &a)) {
            (Ok(r1), Ok(r2)) => (r1, r2),
            (Err(Error::Unclassifiable { .. }), Err(Error::Unclassifiable { .. })) => return Ok(()),
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        };
        prop_assert!((r1.value - r2.value).abs() <= 1e-12 * r1.value.max(1.0));
    }

    #[test]
    fn exponent_scales_linearly(a in sl2(2.0), b in sl2(2.0), k in 0.1f64..5.0) {
        // the independence threshold is not scale-free, so compare case formulas only
        if let (Ok(r), Ok(rk)) = (lyapunov_exponent(&a, &b), lyapunov_exponent(&(k * a), &(k * b))) {
            if r.case.tag != CaseTag::SolvableFallback && rk.case.tag != CaseTag::SolvableFallback {
                prop_assert_eq!(r.case.tag, rk.case.tag);
                prop_assert!((rk.value - k * r.value).abs() <= 1e-10 * (k * r.value).max(1e-300));
            }
        }
    }

    #[test]
    fn exponent_conjugation_invariant(
        a in sl2(2.0), b in sl2(2.0),
        p in (0.5f64..2.0, -1.0f64..1.0, -1.0f64..1.0, 0.5f64..2.0)
    ) {
        let p = Mat2::new(p.0, p.1, p.2, p.3);
        prop_assume!(p.det().abs() > 0.1);
        if let Ok(r) = lyapunov_exponent(&a, &b) {
            let rc = lyapunov_exponent(&conj(&p, &a), &conj(&p, &b));
            // conjugation may move a pair across a classification boundary by rounding
            if let Ok(rc) = rc {
                prop_assert!((rc.value - r.value).abs() <= 1e-7 * r.value.max(1.0));
            }
        }
    }

    #[test]
    fn exponent_dominates_constants(a in sl2(2.0), b in sl2(2.0)) {
        if let Ok(r) = lyapunov_exponent(&a, &b) {
            let floor = constant_control_exponent(&a).max(constant_control_exponent(&b));
            prop_assert!(r.value >= floor - 1e-9 * floor.max(1.0), "{} < {}", r.value, floor);
        }
    }

    #[test]
    fn adjoint_conserves_casimir_and_hamiltonian(
        a in sl2(1.5), b in sl2(1.5), eta in sl2(1.0), u in 0.0f64..=1.0, t in 0.0f64..3.0
    ) {
        let m = u * a + (1.0 - u) * b;
        let x = expm(&m, t).unwrap();
        let et = adjoint_propagate(&eta, &x).unwrap();
        let scale = 1.0 + eta.norm().powi(2) * x.frobenius().powi(4);
        prop_assert!((et.trace_sq() - eta.trace_sq()).abs() <= 1e-10 * scale);
        let h0 = trace_product(&eta, &m);
        let ht = trace_product(&et, &m);
        prop_assert!((ht - h0).abs() <= 1e-10 * scale * (1.0 + m.norm()));
    }

    #[test]
    fn switching_rate_is_derivative(
        a in sl2(1.5), b in sl2(1.5), eta in sl2(1.0), u in 0.0f64..=1.0, t in 0.0f64..2.0
    ) {
        let m = u * a + (1.0 - u) * b;
        let h = 1e-5;
        let at = |tau: f64| {
            let e = adjoint_propagate(&eta, &expm(&m, tau).unwrap()).unwrap();
            switching_value(&e, &a, &b)
        };
        let fd = (at(t + h) - at(t - h)) / (2.0 * h);
        let et = adjoint_propagate(&eta, &expm(&m, t).unwrap()).unwrap();
        let analytic = switching_rate(&et, &a, &b);
        prop_assert!((fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()), "{fd} vs {analytic}");
    }

    #[test]
    fn singular_equilibrium(a in sl2(2.0), b in sl2(2.0)) {
        if let Ok(s) = singular_data(&a, &b) {
            let m = s.velocity(&a, &b);
            for eta in s.eta_star {
                prop_assert!(switching_value(&eta, &a, &b).abs() < 1e-9 * (1.0 + a.norm() + b.norm()));
                let x = expm(&m, 0.7).unwrap();
                let et = adjoint_propagate(&eta, &x).unwrap();
                prop_assert!((et - eta).norm() < 1e-8 * x.frobenius().powi(2));
            }
        }
    }

    #[test]
    fn transversality_tests_agree(
        m in sl2(1.5), t in 0.1f64..2.0, eta in sl2(1.0), along in any::<bool>()
    ) {
        let x = expm(&m, t).unwrap();
        let eta0 = if along { (0.3 + eta.norm()) * x.traceless_part() } else { eta };
        let c = transversality_check(&x, &eta0, TRANSVERSALITY_TOL).unwrap();
        prop_assert!(c.agree(), "{c:?}");
        if along {
            prop_assert!(c.holds());
        }
    }

    #[test]
    fn phi_matches_taylor_oracle(a in sl2(1.5), b in sl2(1.5), t in 0.0f64..2.0, s in 0.0f64..2.0) {
        let p = PeriodPair::new(t, s).unwrap();
        let oracle = (expm_taylor(&a.to_mat2(), t) * expm_taylor(&b.to_mat2(), s)).trace();
        let scale = 1.0 + oracle.abs();
        prop_assert!((phi(&a, &b, p).unwrap() - oracle).abs() < 1e-9 * scale);
        prop_assert!((phi_closed_form(&a, &b, p).unwrap() - oracle).abs() < 1e-9 * scale);
    }

    #[test]
    fn residual_is_partial_difference(a in sl2(1.5), b in sl2(1.5), t in 0.2f64..2.0, s in 0.2f64..2.0) {
        let h = 1e-5;
        let f = |t: f64, s: f64| phi_closed_form(&a, &b, PeriodPair { t, s }).unwrap();
        let dt = (f(t + h, s) - f(t - h, s)) / (2.0 * h);
        let ds = (f(t, s + h) - f(t, s - h)) / (2.0 * h);
        let r = switching_residual(&a, &b, PeriodPair { t, s }).unwrap();
        prop_assert!((dt - ds - r).abs() <= 1e-6 * (1.0 + f(t, s).abs()), "{} vs {r}", dt - ds);
    }

    #[test]
    fn doubling_gap_closed_form_matches(a in sl2(1.5), b in sl2(1.5), t in 0.1f64..3.0, s in 0.1f64..3.0) {
        let p = PeriodPair::new(t, s).unwrap();
        let g = doubling_gap(&a, &b, p).unwrap();
        let c = doubling_gap_closed_form(&a, &b, p).unwrap();
        let x = phi(&a, &b, p).unwrap().abs();
        prop_assert!((g - c).abs() <= 1e-9 * (1.0 + c.abs() + x), "{g} vs {c}");
    }

    #[test]
    fn switch_roots_are_roots(a in sl2(2.0), b in sl2(2.0), t in 0.01f64..2.0) {
        if let Ok(s) = solve_switch_time(&a, &b, t) {
            prop_assert!(s > 0.0);
            let p = PeriodPair { t, s };
            let r = switching_residual(&a, &b, p).unwrap();
            let x = expm(&a, t).unwrap() * expm(&b, s).unwrap();
            let scale = (1.0 + a.norm() + b.norm()) * x.frobenius();
            prop_assert!(r.abs() <= 1e-9 * scale, "t={t} s={s} r={r}");
        }
    }

    #[test]
    fn renormalization_is_transparent(a in sl2(2.0), b in sl2(2.0), seed in any::<u64>()) {
        let mut state = seed | 1;
        let mut segments = Vec::new();
        for i in 0..200 {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            let d = 0.05 + (state % 1000) as f64 / 1000.0;
            segments.push(Segment { duration: d, u: (i % 2) as f64 });
        }
        let sched = ControlSchedule::new(segments, false).unwrap();
        let horizon = sched.total_duration();
        let g100 = propagate(&a, &b, &sched, horizon).unwrap();
        let g50 = propagate_with(&a, &b, &sched, horizon, 1e50).unwrap();
        prop_assert!((g100.rate - g50.rate).abs() < 1e-12 * (1.0 + g100.rate.abs()));
        prop_assert!(g100.det_drift < 1e-6);
    }
}

#[test]
fn lemma_negative_squares_force_large_products() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = (sl2(3.0), sl2(3.0));
    for _ in 0..10_000 {
        let (a, b) = strat.new_tree(&mut runner).unwrap().current();
        let inv = TraceInvariants::of(&a, &b);
        if inv.a < 0.0 && inv.b < 0.0 && independence_test(&a, &b, INDEPENDENCE_TOL) {
            assert!(inv.c.abs() >= (inv.a * inv.b).sqrt() - 1e-9, "{inv:?}");
        }
    }
}

#[test]
fn determinant_drift_over_long_runs() {
    let a = Sl2Matrix::new(1.0, 0.0, 0.0);
    let b = Sl2Matrix::new(0.3, -2.0, 1.1);
    let segments = (0..10_000)
        .map(|i| Segment {
            duration: 0.37 + 0.01 * (i % 7) as f64,
            u: (i % 2) as f64,
        })
        .collect();
    let sched = ControlSchedule::new(segments, false).unwrap();
    let g = propagate(&a, &b, &sched, sched.total_duration()).unwrap();
    assert!(g.det_drift < 1e-6, "{}", g.det_drift);
    assert!(g.rate.is_finite());
}
