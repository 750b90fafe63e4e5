//! Within-task gradient methods for linear regression.
//!
//! Gradients follow the half-gradient convention: the descent direction of the
//! squared loss `ℓ_S(w) = (1/n)‖Xw − y‖²` is taken as `Σ_X w − (1/n)Xᵀy`, and the
//! ridge term `λ/2 ‖w‖²` contributes `λw`. Every method is then an instance of the
//! linear dynamics `w' = −(M w − b)` with `M = Σ_X (+ λI)` and `b = (1/n)Xᵀy`,
//! solved exactly in the eigenbasis of `M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_psd, sym_eigen, EigenDecomposition, SymMatrix, Vector, PINV_REL_TOL};
use crate::tasks::Dataset;

/// Relative residual allowed for the component of `b` outside `range(M)`.
pub const RANGE_TOL: f64 = 1e-8;

/// Plain gradient descent with step `eta` for `t0` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdStepSpec {
    pub eta: f64,
    pub t0: u64,
}

impl GdStepSpec {
    pub fn new(eta: f64, t0: u64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("eta must be positive and finite, got {eta}")));
        }
        Ok(GdStepSpec { eta, t0 })
    }
}

/// Gradient flow to convergence on the ridge objective with weight `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdRegSpec {
    pub lambda: f64,
}

impl GdRegSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(GdRegSpec { lambda })
    }
}

#[derive(Debug, Clone, Copy)]
enum Horizon {
    Flow(f64),
    Steps { eta: f64, t: u64 },
}

fn power(base: f64, t: u64) -> f64 {
    if t <= i32::MAX as u64 {
        base.powi(t as i32)
    } else {
        base.powf(t as f64)
    }
}

/// Evolves `w0` under `w' = −((M + shift·I) w − b)` where `M = V diag(values) Vᵀ`.
///
/// `check_range` rejects a `b` with weight on the numerical null space. Data-derived
/// `b = Xᵀy/n` lies in the range exactly, but its weight on directions with tiny
/// eigenvalue `λ` is of order `√λ`, so the check is skipped for it.
fn evolve(
    eig: &EigenDecomposition,
    shift: f64,
    b: &[f64],
    w0: &[f64],
    horizon: Horizon,
    check_range: bool,
) -> Result<Vector> {
    let d = eig.dim();
    check_dim(d, b.len())?;
    check_dim(d, w0.len())?;
    let beta = eig.to_eigenbasis(b);
    let c0 = eig.to_eigenbasis(w0);
    let cutoff = PINV_REL_TOL * eig.values.iter().fold(0.0f64, |m, l| m.max((l + shift).abs()));

    let mut outside = 0.0;
    for (l, bi) in eig.values.iter().zip(beta.iter()) {
        if l + shift <= cutoff {
            outside += bi * bi;
        }
    }
    let bnorm = beta.norm();
    if check_range && bnorm > 0.0 && outside.sqrt() > RANGE_TOL * bnorm {
        return Err(Error::OutOfRange {
            residual: outside.sqrt() / bnorm,
        });
    }

    let idle = match horizon {
        Horizon::Flow(t) => t == 0.0,
        Horizon::Steps { eta, t } => t == 0 || eta == 0.0,
    };
    if idle {
        return Ok(Vector::from(w0.to_vec()));
    }

    let mut c = Vector::zeros(d);
    for i in 0..d {
        let s = eig.values[i] + shift;
        if s <= cutoff {
            c[i] = c0[i];
            continue;
        }
        let (keep, gain) = match horizon {
            Horizon::Flow(t) => ((-t * s).exp(), -(-t * s).exp_m1()),
            Horizon::Steps { eta, t } => {
                let p = power(1.0 - eta * s, t);
                (p, 1.0 - p)
            }
        };
        let from_init = if c0[i] == 0.0 { 0.0 } else { keep * c0[i] };
        let from_data = if beta[i] == 0.0 { 0.0 } else { gain * beta[i] / s };
        c[i] = from_init + from_data;
    }
    Ok(eig.from_eigenbasis(&c))
}

fn checked_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let eig = sym_eigen(m)?;
    check_psd(&eig)?;
    Ok(eig)
}

/// Solution of `dw/dt = −M w + b` at time `t` (which may be `f64::INFINITY`).
///
/// At `t = ∞` this is `(I − M†M) w0 + M† b`.
pub fn linear_flow_solve(m: &SymMatrix, b: &[f64], w0: &[f64], t: f64) -> Result<Vector> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    evolve(&checked_eigen(m)?, 0.0, b, w0, Horizon::Flow(t), true)
}

/// Value after `t` steps of `w ← w − η (M w − b)`.
pub fn linear_step_solve(m: &SymMatrix, b: &[f64], w0: &[f64], eta: f64, t: u64) -> Result<Vector> {
    if !eta.is_finite() {
        return Err(Error::invalid("eta must be finite"));
    }
    evolve(&checked_eigen(m)?, 0.0, b, w0, Horizon::Steps { eta, t }, true)
}

/// `t0` steps of full-batch gradient descent from `w0`.
pub fn gd_step(spec: &GdStepSpec, ds: &Dataset, w0: &[f64]) -> Result<Vector> {
    let eig = ds.covariance_eigen()?;
    let lmax = eig.lambda_max();
    if spec.t0 > 0 && spec.eta * lmax >= 2.0 {
        log::warn!(
            "gd_step: eta = {} is at or above 2/λ_max = {}; iterates diverge",
            spec.eta,
            2.0 / lmax
        );
    }
    evolve(
        eig,
        0.0,
        &ds.xty(),
        w0,
        Horizon::Steps {
            eta: spec.eta,
            t: spec.t0,
        },
        false,
    )
}

/// Gradient flow to convergence on the ridge objective, from `w0`.
///
/// Returns `(I − M†M) w0 + M† (1/n) Xᵀ y` with `M = Σ_X + λI`.
pub fn gd_reg(spec: &GdRegSpec, ds: &Dataset, w0: &[f64]) -> Result<Vector> {
    evolve(ds.covariance_eigen()?, spec.lambda, &ds.xty(), w0, Horizon::Flow(f64::INFINITY), false)
}

/// A convex within-task method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConvexMethod {
    GdStep(GdStepSpec),
    GdReg(GdRegSpec),
}

impl ConvexMethod {
    pub fn run(&self, ds: &Dataset, w0: &[f64]) -> Result<Vector> {
        match self {
            ConvexMethod::GdStep(s) => gd_step(s, ds, w0),
            ConvexMethod::GdReg(s) => gd_reg(s, ds, w0),
        }
    }

    /// Spectral gain `h(s)` with `Alg(S; w0) = (I − h(Σ)Σ) w0 + h(Σ)(1/n)Xᵀy`,
    /// evaluated on every eigenvalue of `Σ_X`.
    pub fn gains(&self, eig: &EigenDecomposition) -> Vec<f64> {
        match *self {
            ConvexMethod::GdReg(GdRegSpec { lambda }) => {
                let cutoff =
                    PINV_REL_TOL * eig.values.iter().fold(0.0f64, |m, l| m.max((l + lambda).abs()));
                eig.values
                    .iter()
                    .map(|&s| if s + lambda > cutoff { 1.0 / (s + lambda) } else { 0.0 })
                    .collect()
            }
            ConvexMethod::GdStep(GdStepSpec { eta, t0 }) => {
                let cutoff = eig.zero_cutoff(PINV_REL_TOL);
                eig.values
                    .iter()
                    .map(|&s| {
                        if s > cutoff {
                            (1.0 - power(1.0 - eta * s, t0)) / s
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }

    /// `(‖(I − B_X) w*‖², σ² tr(C_Xᵀ C_X))` for this dataset, where
    /// `B_X = h(Σ)Σ` and `C_X = (1/n) h(Σ) Xᵀ`.
    pub fn bias_variance(&self, ds: &Dataset, w_star: &[f64], sigma: f64) -> Result<(f64, f64)> {
        check_dim(ds.d(), w_star.len())?;
        let eig = ds.covariance_eigen()?;
        let h = self.gains(eig);
        let coords = eig.to_eigenbasis(w_star);
        let mut bias = 0.0;
        let mut trace = 0.0;
        for i in 0..eig.dim() {
            let s = eig.values[i].max(0.0);
            bias += ((1.0 - h[i] * s) * coords[i]).powi(2);
            trace += s * h[i] * h[i];
        }
        Ok((bias, sigma * sigma * trace / ds.n() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky_solve, Matrix};
    use crate::oracle;
    use crate::rand::{SeedSpec, Sign, StreamRng};
    use crate::tasks::{sample_dataset, MetaInstance};
    use proptest::prelude::*;

    fn dataset(d: usize, n: usize, sigma: f64, seed: u64) -> (MetaInstance, Dataset) {
        let mut rng = StreamRng::new(SeedSpec::new(seed, 99));
        let inst = MetaInstance::new(rng.normal_vector(d), sigma).unwrap();
        let ds = sample_dataset(&inst.task(Sign::Minus), n, SeedSpec::new(seed, 1)).unwrap();
        (inst, ds)
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let a = Vector::from(a.to_vec());
        a.sub(b).norm() / (1.0 + Vector::from(b.to_vec()).norm())
    }

    #[test]
    fn flow_trivial_cases() {
        let w0 = [1.0, -2.0, 0.5];
        let out = linear_flow_solve(&SymMatrix::identity(3), &[0.0; 3], &w0, f64::INFINITY).unwrap();
        assert_eq!(out.norm(), 0.0);
        let out = linear_flow_solve(&SymMatrix::zeros(3), &[0.0; 3], &w0, 7.0).unwrap();
        assert_eq!(&*out, &w0);
        assert!(matches!(
            linear_flow_solve(&SymMatrix::diag(&[1.0, 0.0]), &[0.0, 1.0], &[0.0; 2], 1.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn flow_matches_rk4() {
        let mut rng = StreamRng::new(SeedSpec::new(4, 4));
        for _ in 0..5 {
            let x = Matrix::from_fn(6, 4, |_, _| rng.std_normal());
            let m = x.gram(6.0);
            let b = m.matvec(&rng.normal_vector(4));
            let w0 = rng.normal_vector(4);
            let closed = linear_flow_solve(&m, &b, &w0, 2.0).unwrap();
            let numeric = oracle::linear_flow_rk4(&m, &b, &w0, 2.0, 1e-4);
            assert!(rel(&closed, &numeric) < 1e-8);
        }
    }

    #[test]
    fn step_trivial_cases_and_loop() {
        let (_, ds) = dataset(4, 6, 0.5, 2);
        let m = ds.covariance().clone();
        let b = ds.xty();
        let w0 = Vector::from(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(linear_step_solve(&m, &b, &w0, 0.1, 0).unwrap(), w0);
        assert!(linear_step_solve(&m, &b, &w0, 0.0, 50).unwrap().max_abs_diff(&w0) < 1e-15);
        let closed = linear_step_solve(&m, &b, &w0, 0.05, 57).unwrap();
        let looped = oracle::linear_step_iterate(&m, &b, &w0, 0.05, 57);
        assert!(rel(&closed, &looped) < 1e-10);
    }

    #[test]
    fn gd_step_zero_steps_and_convergence() {
        let (inst, ds) = dataset(5, 30, 0.0, 3);
        let w0 = Vector::from(vec![1.0; 5]);
        assert_eq!(gd_step(&GdStepSpec::new(0.1, 0).unwrap(), &ds, &w0).unwrap(), w0);
        let eta = 0.9 / ds.covariance_eigen().unwrap().lambda_max();
        let out = gd_step(&GdStepSpec::new(eta, 20_000).unwrap(), &ds, &w0).unwrap();
        let target = inst.task(Sign::Minus).target();
        assert!(out.max_abs_diff(&target) < 1e-6);
    }

    #[test]
    fn gd_step_matches_literal_iteration() {
        let (_, ds) = dataset(5, 8, 1.0, 5);
        let w0 = Vector::from(vec![0.3, -0.1, 0.0, 2.0, 1.0]);
        let spec = GdStepSpec::new(0.05, 40).unwrap();
        let closed = gd_step(&spec, &ds, &w0).unwrap();
        let iter = oracle::gd_step_iterative(&spec, &ds, &w0);
        assert!(rel(&closed, &iter) < 1e-9);
    }

    #[test]
    fn gd_reg_large_lambda_shrinks() {
        let (_, ds) = dataset(4, 6, 1.0, 6);
        let w0 = Vector::from(vec![5.0, 5.0, 5.0, 5.0]);
        let lambda = 1e6;
        let out = gd_reg(&GdRegSpec::new(lambda).unwrap(), &ds, &w0).unwrap();
        assert!(out.norm() <= ds.xty().norm() / lambda * (1.0 + 1e-9));
    }

    #[test]
    fn gd_reg_keeps_null_space_of_init() {
        let (_, ds) = dataset(6, 3, 1.0, 7);
        let w0 = Vector::from(vec![1.0, -1.0, 2.0, 0.5, 0.0, 3.0]);
        let out = gd_reg(&GdRegSpec::new(0.0).unwrap(), &ds, &w0).unwrap();
        let diff = out.sub(&w0);
        let eig = ds.covariance_eigen().unwrap();
        let cut = eig.zero_cutoff(PINV_REL_TOL);
        let coords = eig.to_eigenbasis(&diff);
        for (l, c) in eig.values.iter().zip(coords.iter()) {
            if *l <= cut {
                assert!(c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gd_reg_matches_normal_equations() {
        let (_, ds) = dataset(4, 6, 1.0, 8);
        let out = gd_reg(&GdRegSpec::new(0.5).unwrap(), &ds, &[0.0; 4]).unwrap();
        let direct = cholesky_solve(&ds.covariance().shifted(0.5), &ds.xty()).unwrap();
        assert!(rel(&out, &direct) < 1e-10);
    }

    #[test]
    fn bias_variance_matches_dense_matrices() {
        let (inst, ds) = dataset(5, 4, 0.7, 9);
        for method in [
            ConvexMethod::GdReg(GdRegSpec::new(0.0).unwrap()),
            ConvexMethod::GdReg(GdRegSpec::new(0.3).unwrap()),
            ConvexMethod::GdStep(GdStepSpec::new(0.1, 25).unwrap()),
        ] {
            let (bias, var) = method.bias_variance(&ds, inst.w_star(), inst.sigma()).unwrap();
            // Dense B and C from the algorithm itself: B e_j = Alg(S with y = X e_j; 0),
            // C e_k = Alg(S with y = e_k; 0).
            let d = ds.d();
            let n = ds.n();
            let eig = ds.covariance_eigen().unwrap();
            let h = method.gains(eig);
            let hmat = eig.matrix_from_diag(&h);
            let b = hmat.as_matrix().matmul(ds.covariance().as_matrix());
            let c = hmat.as_matrix().matmul(&ds.x().transpose()).scaled(1.0 / n as f64);
            let resid = Matrix::identity(d).sub(&b).matvec(inst.w_star());
            assert!((bias - resid.norm_sq()).abs() < 1e-10);
            let want = inst.sigma().powi(2) * c.frobenius().powi(2);
            assert!((var - want).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ridge_output_ignores_init(seed in any::<u64>(), lambda in 0.01f64..5.0) {
            let (_, ds) = dataset(5, 3, 1.0, seed);
            let mut rng = StreamRng::new(SeedSpec::new(seed, 5));
            let a = gd_reg(&GdRegSpec::new(lambda).unwrap(), &ds, &rng.normal_vector(5)).unwrap();
            let b = gd_reg(&GdRegSpec::new(lambda).unwrap(), &ds, &rng.normal_vector(5)).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-10);
        }

        #[test]
        fn ridge_is_affine_in_init_target_noise(seed in any::<u64>(), lambda in 0.0f64..2.0) {
            // Alg(w0, v, ξ) = A w0 + B v + C ξ: check superposition by splitting each input.
            let d = 4;
            let n = 3;
            let mut rng = StreamRng::new(SeedSpec::new(seed, 7));
            let x = Matrix::from_fn(n, d, |_, _| rng.std_normal());
            let (w0a, w0b) = (rng.normal_vector(d), rng.normal_vector(d));
            let (va, vb) = (rng.normal_vector(d), rng.normal_vector(d));
            let (xa, xb) = (rng.normal_vector(n), rng.normal_vector(n));
            let spec = GdRegSpec::new(lambda).unwrap();
            let run = |w0: &Vector, v: &Vector, xi: &Vector| {
                let inst = MetaInstance::new(v.clone(), 0.0).unwrap();
                let ds = Dataset::from_parts(&inst.task(Sign::Plus), x.clone(), xi.clone()).unwrap();
                gd_reg(&spec, &ds, w0).unwrap()
            };
            let whole = run(&w0a.add(&w0b), &va.add(&vb), &xa.add(&xb));
            let parts = run(&w0a, &va, &xa).add(&run(&w0b, &vb, &xb));
            prop_assert!(rel(&whole, &parts) < 1e-9);
        }

        #[test]
        fn closed_forms_match_oracles(seed in any::<u64>(), d in 1usize..=8, n in 1usize..=16) {
            let (_, ds) = dataset(d, n, 1.0, seed);
            let mut rng = StreamRng::new(SeedSpec::new(seed, 3));
            let w0 = rng.normal_vector(d);
            let lmax = ds.covariance_eigen().unwrap().lambda_max();
            let spec = GdStepSpec::new(1.0 / lmax, 30).unwrap();
            let closed = gd_step(&spec, &ds, &w0).unwrap();
            let iter = oracle::gd_step_iterative(&spec, &ds, &w0);
            prop_assert!(rel(&closed, &iter) < 1e-8);
        }
    }
}
