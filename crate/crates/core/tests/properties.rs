use metasep::convex::{gd_reg, GdRegSpec};
use metasep::linalg::{pinv_apply, sym_eigen, PINV_REL_TOL};
use metasep::meta::{reptile_trajectory, run_replearn, ReptileSpec};
use metasep::rand::{rademacher_signs, SeedSpec};
use metasep::risk::{convex_lower_bound_exact, convex_min_samples, draw_trial, RiskEstimate};
use metasep::twolayer::gd_pop_fixed_point;
use metasep::{Dataset, Matrix, MetaInstance, ScalarPair, Sign, SymMatrix, Vector};
use proptest::prelude::*;

fn sym(d: usize, entries: &[f64]) -> SymMatrix {
    SymMatrix::from_fn(d, |i, j| entries[i * d + j])
}

proptest! {
    #[test]
    fn eigen_reconstructs(d in 1usize..7, entries in prop::collection::vec(-3.0f64..3.0, 49)) {
        let m = sym(d, &entries);
        let eig = sym_eigen(&m).unwrap();
        let err = eig.reconstruct().as_matrix().sub(m.as_matrix()).frobenius();
        prop_assert!(err <= 1e-10 * m.frobenius().max(1.0));
        prop_assert!(eig.orthogonality_residual() < 1e-10);
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pinv_is_least_squares(d in 2usize..7, k in 1usize..4, entries in prop::collection::vec(-2.0f64..2.0, 24), v in prop::collection::vec(-2.0f64..2.0, 6)) {
        let k = k.min(d);
        let b = Matrix::from_fn(k, d, |i, j| entries[i * 6 + j]);
        let m = b.gram(1.0);
        let v = &v[..d];
        let x = pinv_apply(&m, v, PINV_REL_TOL).unwrap();
        // normal equations M(Mx − v) = 0
        let r = m.matvec(&m.matvec(&x).sub(v));
        prop_assert!(r.norm() < 1e-8 * (1.0 + m.frobenius().powi(2)));
    }

    #[test]
    fn lower_bound_shape(d in 1usize..200, n in 0usize..400, r in 0.1f64..3.0, sigma in 0.1f64..3.0) {
        let b = convex_lower_bound_exact(d, n, r, sigma);
        prop_assert!(b >= 0.0 && b <= r * r + 1e-12);
        prop_assert!(convex_lower_bound_exact(d, n + 1, r, sigma) <= b + 1e-12);
    }

    #[test]
    fn min_samples_is_minimal(d in 1usize..100, eps in 0.01f64..0.9) {
        let n = convex_min_samples(d, 1.0, 1.0, eps).unwrap();
        prop_assert!(convex_lower_bound_exact(d, n, 1.0, 1.0) <= eps);
        if n > 0 {
            prop_assert!(convex_lower_bound_exact(d, n - 1, 1.0, 1.0) > eps);
        }
    }

    #[test]
    fn risk_estimate_bounds(xs in prop::collection::vec(0.0f64..10.0, 2..50)) {
        let e = RiskEstimate::from_samples(&xs).unwrap();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(0.0, f64::max);
        prop_assert!(e.mean >= lo - 1e-12 && e.mean <= hi + 1e-12);
        prop_assert!(e.stderr >= 0.0);
        prop_assert_eq!(e.trials, xs.len());
    }

    #[test]
    fn fixed_point_stays_on_hyperbola(a in 0.0f64..4.0, frac in 0.0f64..1.0, r in 0.05f64..4.0, plus in any::<bool>()) {
        let s = if plus { Sign::Plus } else { Sign::Minus };
        let start = ScalarPair::new(a, frac * a);
        let fp = gd_pop_fixed_point(start, r, s);
        prop_assert!((fp.conserved() - start.conserved()).abs() <= 1e-12 * fp.a.powi(2).max(1.0));
        prop_assert!((fp.a * fp.b - s.value() * r).abs() <= 1e-12 * r.max(1.0));
        prop_assert!(fp.a > 0.0);
    }

    #[test]
    fn reptile_a_never_decreases(tau in 0.01f64..0.99, kappa in 0.01f64..1.0, r in 0.1f64..3.0, seed in any::<u64>()) {
        let spec = ReptileSpec::new(tau, kappa, 200).unwrap();
        let tr = reptile_trajectory(&spec, r, rademacher_signs(SeedSpec::new(seed, 0), 200));
        prop_assert!(tr.a_nondecreasing());
        prop_assert!(tr.max_abs_product() <= r * (1.0 + 1e-10));
    }

    #[test]
    fn replearn_alpha_grows_with_tasks(t in 1.0f64..1e8, kappa in 0.01f64..1.0) {
        let inst = MetaInstance::axis_aligned(3, 1.0, 1.0).unwrap();
        let lo = run_replearn(t, kappa, &inst).unwrap();
        let hi = run_replearn(4.0 * t, kappa, &inst).unwrap();
        prop_assert!(hi.alpha() > lo.alpha());
        prop_assert!((lo.alpha() * lo.b_bar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_shrinks_norm(seed in any::<u64>(), n in 1usize..12, lambda in 0.01f64..5.0) {
        let inst = MetaInstance::axis_aligned(5, 1.0, 0.5).unwrap();
        let (_, ds) = draw_trial(&inst, n, SeedSpec::new(seed, 1)).unwrap();
        let zero = Vector::zeros(5);
        let small = gd_reg(&GdRegSpec::new(lambda).unwrap(), &ds, &zero).unwrap();
        let big = gd_reg(&GdRegSpec::new(2.0 * lambda).unwrap(), &ds, &zero).unwrap();
        prop_assert!(big.norm() <= small.norm() + 1e-12);
    }

    #[test]
    fn ridge_ignores_init_when_regularized(seed in any::<u64>(), n in 1usize..10, lambda in 0.01f64..3.0) {
        let inst = MetaInstance::axis_aligned(6, 1.0, 0.5).unwrap();
        let (_, ds) = draw_trial(&inst, n, SeedSpec::new(seed, 2)).unwrap();
        let spec = GdRegSpec::new(lambda).unwrap();
        let a = gd_reg(&spec, &ds, &Vector::zeros(6)).unwrap();
        let b = gd_reg(&spec, &ds, &Vector::from_fn(6, |i| 3.0 - i as f64)).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }

    // affine in (w0, ξ) for a fixed design
    #[test]
    fn ridge_is_affine(seed in any::<u64>(), n in 1usize..10, lambda in 0.0f64..2.0, t in 0.0f64..1.0) {
        let d = 6;
        let inst = MetaInstance::axis_aligned(d, 1.0, 1.0).unwrap();
        let task = inst.task(Sign::Plus);
        let mut rng = SeedSpec::new(seed, 3).rng();
        let x = Matrix::from_fn(n, d, |_, _| rng.std_normal());
        let (xi1, xi2) = (rng.normal_vector(n), rng.normal_vector(n));
        let (p1, p2) = (rng.normal_vector(d), rng.normal_vector(d));
        let spec = GdRegSpec::new(lambda).unwrap();
        let run = |xi: &Vector, w0: &Vector| {
            let ds = Dataset::from_parts(&task, x.clone(), xi.clone()).unwrap();
            gd_reg(&spec, &ds, w0).unwrap()
        };
        let mix = |u: &Vector, v: &Vector| u.scaled(t).add(&v.scaled(1.0 - t));
        let lhs = run(&mix(&xi1, &xi2), &mix(&p1, &p2));
        let rhs = mix(&run(&xi1, &p1), &run(&xi2, &p2));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-8 * (1.0 + rhs.norm()));
    }
}
