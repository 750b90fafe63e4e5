//! Values checked against independent derivations rather than the library's own formulas.

use metasep::convex::{gd_reg, gd_step, GdRegSpec, GdStepSpec};
use metasep::meta::{reptile_tau_schedule, run_replearn};
use metasep::oracle;
use metasep::rand::{rademacher_signs, SeedSpec};
use metasep::risk::{convex_lower_bound_exact, convex_min_samples, draw_trial, mc_excess_risk, AlgSpec, Workers};
use metasep::tasks::emp_loss_linear;
use metasep::{MetaInstance, Vector};

// Gaussian-prior posterior mean: (XᵀX + (σ²d/r²) I)⁻¹ Xᵀy, i.e. λ = σ²d/(r²n).
// Its risk sits just above the exact bound once n ≫ d.
#[test]
fn bayes_ridge_tracks_lower_bound() {
    let (d, n) = (5, 60);
    let inst = MetaInstance::axis_aligned(d, 1.0, 1.0).unwrap();
    let alg = AlgSpec::GdReg {
        spec: GdRegSpec::new(d as f64 / n as f64).unwrap(),
        w0: Vector::zeros(d),
    };
    let w = Workers::new(2).unwrap();
    let est = mc_excess_risk(&alg, &inst, n, 4000, SeedSpec::new(11, 11), &w).unwrap();
    let bound = convex_lower_bound_exact(d, n, 1.0, 1.0);
    assert!(est.upper(3.0) >= bound, "{est:?} vs {bound}");
    assert!(est.mean <= 1.25 * bound, "{est:?} vs {bound}");
}

// n < d, noiseless: min-norm interpolation from 0 keeps the span of the rows,
// so the risk is r²(d − n)/d in expectation for a rotation-invariant design.
#[test]
fn noiseless_interpolation_risk() {
    let (d, n) = (12, 4);
    let inst = MetaInstance::axis_aligned(d, 1.0, 0.0).unwrap();
    let alg = AlgSpec::GdReg {
        spec: GdRegSpec::new(0.0).unwrap(),
        w0: Vector::zeros(d),
    };
    let est = mc_excess_risk(&alg, &inst, n, 3000, SeedSpec::new(3, 3), &Workers::new(2).unwrap()).unwrap();
    let want = (d - n) as f64 / d as f64;
    assert!((est.mean - want).abs() < 4.0 * est.stderr + 1e-3, "{est:?} vs {want}");
    assert_eq!(convex_lower_bound_exact(d, n, 1.0, 0.0), want);
}

#[test]
fn bound_spot_values() {
    assert_eq!(convex_lower_bound_exact(20, 20, 1.0, 1.0), 0.5);
    assert_eq!(convex_min_samples(50, 1.0, 1.0, 0.05).unwrap(), 950);
    // n = 0: nothing learned, full target norm
    assert_eq!(convex_lower_bound_exact(7, 0, 2.0, 1.0), 4.0);
}

#[test]
fn replearn_alpha_closed_form() {
    let inst = MetaInstance::axis_aligned(3, 1.0, 1.0).unwrap();
    let a = run_replearn(1e4, 0.1, &inst).unwrap().alpha();
    // κ⁴ ≪ 4r²T: ā ≈ (r²T)^{1/4}
    assert!((a - 10.0).abs() < 1e-3);
    assert!((a - ((0.01 + (4e4f64 + 1e-4).sqrt()) / 2.0).sqrt()).abs() < 1e-12);
}

#[test]
fn tau_schedule_hand_value() {
    let t = 1000.0f64;
    let want = t.powf(-1.0 / 3.0) * (2.0 * t / 0.1).ln().powf(-2.0 / 3.0);
    assert!((reptile_tau_schedule(1000, 0.1).unwrap() - want).abs() < 1e-15);
    assert!((want - 0.1 * 9.903487552536127f64.powf(-2.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn closed_forms_match_literal_loops() {
    let inst = MetaInstance::axis_aligned(6, 1.3, 0.4).unwrap();
    for k in 0..20 {
        let (_, ds) = draw_trial(&inst, 3 + k % 9, SeedSpec::new(5, k as u64)).unwrap();
        let w0 = Vector::from_fn(6, |i| (i as f64 * 0.37 + k as f64).sin());
        let spec = GdStepSpec::new(0.05, 150).unwrap();
        let fast = gd_step(&spec, &ds, &w0).unwrap();
        let slow = oracle::gd_step_iterative(&spec, &ds, &w0);
        assert!(fast.max_abs_diff(&slow) < 1e-9 * (1.0 + slow.norm()));

        let ridge = GdRegSpec::new(0.5).unwrap();
        let fast = gd_reg(&ridge, &ds, &w0).unwrap();
        assert!(fast.max_abs_diff(&oracle::gd_reg_flow(&ridge, &ds, &w0)) < 1e-6);
    }
}

#[test]
fn gd_step_descends() {
    let inst = MetaInstance::axis_aligned(4, 1.0, 0.3).unwrap();
    let (_, ds) = draw_trial(&inst, 30, SeedSpec::new(8, 8)).unwrap();
    let w0 = Vector::zeros(4);
    let mut last = emp_loss_linear(&ds, &w0).unwrap();
    for t0 in [1, 5, 20, 100] {
        let w = gd_step(&GdStepSpec::new(0.1, t0).unwrap(), &ds, &w0).unwrap();
        let loss = emp_loss_linear(&ds, &w).unwrap();
        assert!(loss <= last + 1e-12);
        last = loss;
    }
}

#[test]
fn sign_streams_are_reproducible() {
    let a = rademacher_signs(SeedSpec::new(1, 2), 50);
    let b = rademacher_signs(SeedSpec::new(1, 2), 50);
    let c = rademacher_signs(SeedSpec::new(1, 3), 50);
    assert_eq!(a, b);
    assert_ne!(a, c);
}
