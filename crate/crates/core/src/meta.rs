//! Meta-learners that produce a first layer: Reptile and RepLearn.
//!
//! Both keep the first layer in spiked form around `ŵ* = w*/‖w*‖`, so they are run
//! in the reduced coordinates `(a, b)` of [`ScalarPair`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SpikedIdentity, SymMatrix, Vector};
use crate::rand::{rademacher_signs, SeedSpec, Sign};
use crate::tasks::MetaInstance;
use crate::twolayer::{gd_pop_fixed_point, FirstLayer, ScalarPair};

/// Default scale of the identity initialization `κI`.
pub const DEFAULT_KAPPA: f64 = 0.1;

/// Reptile with interpolation rate `tau`, initialization `κI`, over `t_tasks` tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReptileSpec {
    pub tau: f64,
    pub kappa: f64,
    pub t_tasks: u64,
}

impl ReptileSpec {
    pub fn new(tau: f64, kappa: f64, t_tasks: u64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(ReptileSpec { tau, kappa, t_tasks })
    }
}

/// States `(a_i, b_i)` for `i = 0..=T` and the signs `s_1..s_T` that drove them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarTrajectory {
    pub states: Vec<ScalarPair>,
    pub signs: Vec<Sign>,
}

impl ScalarTrajectory {
    pub fn last(&self) -> ScalarPair {
        *self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_abs_b(&self) -> f64 {
        self.states.iter().map(|p| p.b.abs()).fold(0.0, f64::max)
    }

    pub fn a_nondecreasing(&self) -> bool {
        self.states.windows(2).all(|w| w[1].a >= w[0].a)
    }

    pub fn max_abs_product(&self) -> f64 {
        self.states.iter().map(|p| (p.a * p.b).abs()).fold(0.0, f64::max)
    }
}

/// One Reptile update: move a fraction `tau` toward the population-flow limit.
pub fn reptile_scalar_step(state: ScalarPair, s: Sign, tau: f64, r: f64) -> ScalarPair {
    let fp = gd_pop_fixed_point(state, r, s);
    ScalarPair::new(
        (1.0 - tau) * state.a + tau * fp.a,
        (1.0 - tau) * state.b + tau * fp.b,
    )
}

/// Runs the scalar recursion from `(κ, 0)` along a given sign sequence.
pub fn reptile_trajectory(spec: &ReptileSpec, r: f64, signs: Vec<Sign>) -> ScalarTrajectory {
    let mut states = Vec::with_capacity(signs.len() + 1);
    let mut state = ScalarPair::new(spec.kappa, 0.0);
    states.push(state);
    for &s in &signs {
        state = reptile_scalar_step(state, s, spec.tau, r);
        states.push(state);
    }
    ScalarTrajectory { states, signs }
}

/// Final `a_T` of the recursion without storing the trajectory.
pub fn reptile_final_a(spec: &ReptileSpec, r: f64, seed: SeedSpec) -> f64 {
    let mut rng = seed.rng();
    let mut state = ScalarPair::new(spec.kappa, 0.0);
    for _ in 0..spec.t_tasks {
        state = reptile_scalar_step(state, rng.sign(), spec.tau, r);
    }
    state.a
}

/// Output of [`run_reptile`]: the returned first layer and the path that produced it.
#[derive(Debug, Clone)]
pub struct ReptileRun {
    pub first: SpikedIdentity,
    pub trajectory: ScalarTrajectory,
}

/// Reptile over `T` tasks with signs drawn from `seed`. The final second layer is
/// discarded; only `A_T = (a_T − κ)ŵ*ŵ*ᵀ + κI` is returned.
pub fn run_reptile(spec: &ReptileSpec, inst: &MetaInstance, seed: SeedSpec) -> Result<ReptileRun> {
    let len = usize::try_from(spec.t_tasks).map_err(|_| Error::invalid("t_tasks too large"))?;
    let trajectory = reptile_trajectory(spec, inst.r(), rademacher_signs(seed, len));
    let first = SpikedIdentity::new(&inst.direction(), trajectory.last().a, spec.kappa)?;
    Ok(ReptileRun { first, trajectory })
}

/// `τ = T^{-1/3} ln(2T/δ)^{-2/3}`, clamped into `(0, 1)`.
pub fn reptile_tau_schedule(t_tasks: u64, delta: f64) -> Result<f64> {
    if t_tasks < 2 {
        return Err(Error::invalid(format!("need T >= 2, got {t_tasks}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    let t = t_tasks as f64;
    let tau = t.powf(-1.0 / 3.0) * (2.0 * t / delta).ln().powf(-2.0 / 3.0);
    let upper = 1.0 - f64::EPSILON;
    Ok(tau.clamp(f64::MIN_POSITIVE, upper))
}

/// Lower bound on `a_T` that holds with probability `1 − δ`:
/// `min{√r / (2√(τ ln(T/δ))), √r (τT)^{1/4} / 2}`.
pub fn reptile_growth_bound(r: f64, tau: f64, t_tasks: u64, delta: f64) -> f64 {
    let t = t_tasks as f64;
    let first = r.sqrt() / (2.0 * (tau * (t / delta).ln()).sqrt());
    let second = r.sqrt() * (tau * t).powf(0.25) / 2.0;
    first.min(second)
}

/// High-probability envelope for `max_i |b_i|`: `√(2 r τ ln(2T/δ))`.
pub fn reptile_fluctuation_bound(r: f64, tau: f64, t_tasks: u64, delta: f64) -> f64 {
    (2.0 * r * tau * (2.0 * t_tasks as f64 / delta).ln()).sqrt()
}

/// Limit of the joint gradient flow on the multi-task objective, started from
/// `(κI, 0, …, 0)`.
#[derive(Debug, Clone)]
pub struct RepLearnSolution {
    pub first: SpikedIdentity,
    /// Magnitude of every per-task second layer: `w_i = s_i b̄ ŵ*`.
    pub b_bar: f64,
}

impl RepLearnSolution {
    pub fn alpha(&self) -> f64 {
        self.first.spike()
    }

    /// Per-task second layers for a concrete sign pattern.
    pub fn second_layers(&self, signs: &[Sign]) -> Vec<Vector> {
        signs
            .iter()
            .map(|s| self.first.direction().scaled(s.value() * self.b_bar))
            .collect()
    }
}

/// `ā = √((κ² + √(4r²T + κ⁴))/2)`, `b̄ = r/ā`. Independent of the sign pattern.
pub fn run_replearn(t_tasks: f64, kappa: f64, inst: &MetaInstance) -> Result<RepLearnSolution> {
    if !(t_tasks >= 1.0) || !t_tasks.is_finite() {
        return Err(Error::invalid(format!("need T >= 1, got {t_tasks}")));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    let r = inst.r();
    let k2 = kappa * kappa;
    let q = (4.0 * r * r * t_tasks + k2 * k2).sqrt();
    let a = (0.5 * (k2 + q)).sqrt();
    Ok(RepLearnSolution {
        first: SpikedIdentity::new(&inst.direction(), a, kappa)?,
        b_bar: r / a,
    })
}

/// The degenerate minimizer `(I, [s_i w*])` of the multi-task objective.
pub fn bad_minimizer(inst: &MetaInstance, signs: &[Sign]) -> (SymMatrix, Vec<Vector>) {
    let seconds = signs.iter().map(|s| inst.w_star().scaled(s.value())).collect();
    (SymMatrix::identity(inst.d()), seconds)
}

/// Multi-task objective minus the noise floor: `(1/T) Σ ‖Aᵀ w_i − s_i w*‖²`.
pub fn rep_loss(inst: &MetaInstance, first: &FirstLayer, seconds: &[Vector], signs: &[Sign]) -> Result<f64> {
    if seconds.len() != signs.len() || signs.is_empty() {
        return Err(Error::invalid("need one second layer per sign, at least one task"));
    }
    let mut total = 0.0;
    for (w, s) in seconds.iter().zip(signs) {
        let pred = first.tr_matvec(w);
        total += pred.sub(&inst.w_star().scaled(s.value())).norm_sq();
    }
    Ok(total / signs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    #[test]
    fn step_extremes() {
        let st = ScalarPair::new(0.4, -0.2);
        assert_eq!(reptile_scalar_step(st, Sign::Plus, 0.0, 1.0), st);
        let full = reptile_scalar_step(st, Sign::Plus, 1.0, 1.0);
        assert_eq!(full, gd_pop_fixed_point(st, 1.0, Sign::Plus));
    }

    #[test]
    fn first_step_from_small_init() {
        let next = reptile_scalar_step(ScalarPair::new(0.1, 0.0), Sign::Minus, 0.3, 1.0);
        let a_bar = ((0.01 + 4.0001f64.sqrt()) / 2.0).sqrt();
        assert!((next.a - (0.07 + 0.3 * a_bar)).abs() < 1e-15);
        assert!((next.b + 0.3 / a_bar).abs() < 1e-15);
    }

    #[test]
    fn zero_tasks() {
        let inst = MetaInstance::axis_aligned(3, 1.0, 1.0).unwrap();
        let run = run_reptile(&ReptileSpec::new(0.3, 0.1, 0).unwrap(), &inst, SeedSpec::new(1, 1)).unwrap();
        assert_eq!(run.trajectory.states, vec![ScalarPair::new(0.1, 0.0)]);
        assert_eq!(run.first.spike(), 0.1);
    }

    #[test]
    fn figure_configuration_shape() {
        let inst = MetaInstance::axis_aligned(2, 1.0, 0.0).unwrap();
        let spec = ReptileSpec::new(0.3, 0.1, 1000).unwrap();
        let run = run_reptile(&spec, &inst, SeedSpec::new(42, 0)).unwrap();
        let tr = &run.trajectory;
        assert_eq!(tr.states.len(), 1001);
        assert!(tr.a_nondecreasing());
        assert!(tr.max_abs_product() <= 1.0 + 1e-10);
        let pos = tr.states.iter().filter(|p| p.b > 0.0).count();
        let neg = tr.states.iter().filter(|p| p.b < 0.0).count();
        assert!(pos > 100 && neg > 100);
    }

    #[test]
    fn scalar_matches_matrix_form() {
        let inst = MetaInstance::new(Vector::from(vec![0.3, -1.0, 0.2, 0.5, 0.0, 0.7]), 0.0).unwrap();
        let spec = ReptileSpec::new(0.3, 0.1, 20).unwrap();
        let signs = rademacher_signs(SeedSpec::new(5, 5), 20);
        let scalar = reptile_trajectory(&spec, inst.r(), signs.clone());
        let matrix = oracle::reptile_matrix_run(&spec, &inst, &signs);
        for (p, q) in scalar.states.iter().zip(&matrix.states) {
            assert!((p.a - q.a).abs() < 1e-10 && (p.b - q.b).abs() < 1e-10);
        }
        assert!(matrix.max_spiked_residual < 1e-10);
    }

    #[test]
    fn tau_schedule_values() {
        let tau = reptile_tau_schedule(1_000_000, 0.1).unwrap();
        let want = 1e-2 * (2e6f64 / 0.1).ln().powf(-2.0 / 3.0);
        assert!((tau - want).abs() < 1e-15);
        let tau8 = reptile_tau_schedule(8, 1.0).unwrap();
        assert!(tau8 > 0.0 && tau8 < 1.0);
        assert!(reptile_tau_schedule(2, 1.0).unwrap() < 1.0);
        assert!(reptile_tau_schedule(1, 0.1).is_err());
        assert!(reptile_tau_schedule(10, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for t in [2u64, 10, 100, 1000, 10_000, 100_000] {
            let tau = reptile_tau_schedule(t, 0.1).unwrap();
            assert!(tau < prev);
            prev = tau;
        }
    }

    #[test]
    fn replearn_closed_form_values() {
        let inst = MetaInstance::axis_aligned(3, 1.0, 0.0).unwrap();
        let sol = run_replearn(1e4, 0.1, &inst).unwrap();
        let want = ((0.01 + (4e4f64 + 1e-4).sqrt()) / 2.0).sqrt();
        assert!((sol.alpha() - want).abs() < 1e-12);
        let tiny = run_replearn(1.0, 1e-9, &inst).unwrap();
        assert!((tiny.alpha() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn replearn_matches_joint_flow() {
        let inst = MetaInstance::new(Vector::from(vec![0.6, 0.0, -0.8, 0.0]), 0.0).unwrap();
        let signs = [Sign::Plus, Sign::Minus, Sign::Minus];
        let sol = run_replearn(3.0, 0.1, &inst).unwrap();
        let flow = oracle::replearn_joint_flow(0.1, &inst, &signs, 1e4, 1e-12);
        let err = flow.first.sub(sol.first.to_dense().as_matrix()).frobenius();
        assert!(err < 1e-5, "err={err}");
        for (w, want) in flow.seconds.iter().zip(sol.second_layers(&signs)) {
            assert!(w.max_abs_diff(&want) < 1e-5);
        }
    }

    #[test]
    fn bad_minimizer_has_zero_loss() {
        let inst = MetaInstance::new(Vector::from(vec![1.0, 2.0, -0.5]), 1.0).unwrap();
        let signs = [Sign::Plus, Sign::Minus];
        let (a, ws) = bad_minimizer(&inst, &signs);
        assert_eq!(a, SymMatrix::identity(3));
        assert_eq!(&*ws[0], &[1.0, 2.0, -0.5]);
        assert_eq!(&*ws[1], &[-1.0, -2.0, 0.5]);
        assert_eq!(rep_loss(&inst, &FirstLayer::Dense(a), &ws, &signs).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn trajectory_invariants(seed in any::<u64>(), tau in 0.01f64..0.99, kappa in 0.01f64..2.0, r in 0.1f64..3.0) {
            let spec = ReptileSpec::new(tau, kappa, 200).unwrap();
            let tr = reptile_trajectory(&spec, r, rademacher_signs(SeedSpec::new(seed, 0), 200));
            prop_assert!(tr.a_nondecreasing());
            prop_assert!(tr.max_abs_product() <= r + 1e-10);
        }

        #[test]
        fn replearn_exceeds_quartic_root(t in 1.0f64..1e12, r in 0.1f64..5.0) {
            let inst = MetaInstance::axis_aligned(2, r, 0.0).unwrap();
            let sol = run_replearn(t, 1e-6, &inst).unwrap();
            prop_assert!(sol.alpha() >= (r * r * t).powf(0.25) * (1.0 - 1e-6));
        }
    }
}
