//! Two-layer linear networks `x ↦ wᵀ A x`.
//!
//! Contains the closed-form limit of the population gradient flow, a numeric
//! integrator for that flow, and ridge regression on the second layer with the
//! first layer frozen.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, cholesky_solve, Matrix, SpikedIdentity, SymMatrix, Vector};
use crate::ode::{rk4_step, Rk4Scratch};
use crate::rand::Sign;
use crate::tasks::{Dataset, Task};

/// Default horizon for [`gd_pop_flow_numeric`].
pub const FLOW_T_MAX: f64 = 1e4;
/// Default right-hand-side norm at which the flow counts as converged.
pub const FLOW_TOL: f64 = 1e-10;

/// First-layer matrix, either dense or in spiked form.
#[derive(Debug, Clone, PartialEq)]
pub enum FirstLayer {
    Dense(SymMatrix),
    Spiked(SpikedIdentity),
}

impl FirstLayer {
    pub fn dim(&self) -> usize {
        match self {
            FirstLayer::Dense(m) => m.dim(),
            FirstLayer::Spiked(s) => s.dim(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vector {
        match self {
            FirstLayer::Dense(m) => m.matvec(v),
            FirstLayer::Spiked(s) => s.matvec(v),
        }
    }

    /// `Aᵀ v`, equal to `A v` since both representations are symmetric.
    pub fn tr_matvec(&self, v: &[f64]) -> Vector {
        self.matvec(v)
    }

    pub fn to_dense(&self) -> SymMatrix {
        match self {
            FirstLayer::Dense(m) => m.clone(),
            FirstLayer::Spiked(s) => s.to_dense(),
        }
    }

    /// `A M A` for a symmetric `M`.
    pub fn sandwich(&self, m: &SymMatrix) -> SymMatrix {
        match self {
            FirstLayer::Dense(a) => m.sandwich(a),
            FirstLayer::Spiked(s) => {
                let am = s.mul_left(m.as_matrix());
                let ama = s.mul_left(&am.transpose());
                let d = m.dim();
                SymMatrix::from_fn(d, |i, j| 0.5 * (ama[(i, j)] + ama[(j, i)]))
            }
        }
    }
}

/// Parameters `θ = (A, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerParams {
    pub first: FirstLayer,
    pub second: Vector,
}

impl TwoLayerParams {
    pub fn new(first: FirstLayer, second: Vector) -> Result<Self> {
        check_dim(first.dim(), second.dim())?;
        Ok(TwoLayerParams { first, second })
    }

    /// The end-to-end linear predictor `Aᵀ w`.
    pub fn predictor(&self) -> Vector {
        self.first.tr_matvec(&self.second)
    }
}

/// Reduced coordinates: `A = (a − κ)ŵŵᵀ + κI`, `w = b ŵ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalarPair {
    pub a: f64,
    pub b: f64,
}

impl ScalarPair {
    pub fn new(a: f64, b: f64) -> Self {
        ScalarPair { a, b }
    }

    /// The flow invariant `a² − b²`, evaluated as `(a − b)(a + b)`.
    pub fn conserved(&self) -> f64 {
        (self.a - self.b) * (self.a + self.b)
    }

    /// Whether `a > b ≥ 0`, the region where the closed form is known to be the flow limit.
    pub fn in_fixed_point_hypothesis(&self) -> bool {
        self.a > self.b && self.b >= 0.0
    }
}

/// Limit of the scalar population flow started from `state`:
///
/// ```text
/// c = a² − b²,  ā = √((c + √(4r² + c²))/2),  b̄ = s · r / ā
/// ```
///
/// `ā² − b̄² = c` and `ā b̄ = s r`. Inputs outside `a > b ≥ 0` are evaluated all
/// the same (see [`ScalarPair::in_fixed_point_hypothesis`]).
pub fn gd_pop_fixed_point(state: ScalarPair, r: f64, s: Sign) -> ScalarPair {
    let c = state.conserved();
    let q = (2.0 * r).hypot(c);
    // For c < 0 the direct form cancels; use (c + q)/2 = 2r²/(q − c) instead.
    let a_sq = if c >= 0.0 { 0.5 * (c + q) } else { 2.0 * r * r / (q - c) };
    let a = a_sq.sqrt();
    let b = if a > 0.0 { r / a } else { (-c).max(0.0).sqrt() };
    if !state.in_fixed_point_hypothesis() {
        log::debug!("fixed point evaluated outside a > b >= 0 at {state:?}");
    }
    ScalarPair::new(a, s.value() * b)
}

/// Result of integrating the population flow.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub params: TwoLayerParams,
    pub converged: bool,
    pub time: f64,
    pub steps: u64,
    /// `max_t ‖(AAᵀ − wwᵀ)(t) − (AAᵀ − wwᵀ)(0)‖_F`.
    pub conserved_drift: f64,
    /// `max_t ‖A(t) − P(A(t))‖_F / ‖A(t)‖_F` where `P` projects onto spiked
    /// matrices around the target direction.
    pub max_spiked_residual: f64,
}

fn conserved_matrix(a: &Matrix, w: &[f64]) -> Matrix {
    let mut q = a.matmul(&a.transpose());
    q.add_outer(-1.0, w, w);
    q
}

/// Integrates `dA/dt = s w w*ᵀ − w wᵀ A`, `dw/dt = s A w* − A Aᵀ w` with RK4.
///
/// Step size is `min(1e-3, 0.05 / (1 + ‖A‖_F²))`, re-evaluated every step. Stops once
/// the right-hand side has Frobenius norm below `tol` or at `t_max`.
pub fn gd_pop_flow_numeric(params: &TwoLayerParams, task: &Task<'_>, t_max: f64, tol: f64) -> Result<FlowOutcome> {
    let d = params.first.dim();
    check_dim(task.instance.d(), d)?;
    if !(t_max >= 0.0) || !(tol > 0.0) {
        return Err(Error::invalid("t_max must be >= 0 and tol > 0"));
    }
    let target = task.target();
    let direction = task.instance.direction();
    let dd = d * d;

    let mut y = params.first.to_dense().into_matrix().as_slice().to_vec();
    y.extend_from_slice(&params.second);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial parameters must be finite"));
    }

    let mut rhs = |y: &[f64], out: &mut [f64]| {
        let a = &y[..dd];
        let w = &y[dd..];
        // u = Aᵀ w
        let mut u = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                u[j] += a[i * d + j] * w[i];
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = w[i] * (target[j] - u[j]);
            }
        }
        // dw = A (target − u)
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += a[i * d + j] * (target[j] - u[j]);
            }
            out[dd + i] = acc;
        }
    };

    let split = |y: &[f64]| {
        (
            Matrix::from_row_major(d, d, y[..dd].to_vec()).expect("square"),
            y[dd..].to_vec(),
        )
    };
    let (a0, w0) = split(&y);
    let q0 = conserved_matrix(&a0, &w0);
    let spiked_residual = |a: &Matrix| -> f64 {
        let norm = a.frobenius();
        if norm == 0.0 {
            return 0.0;
        }
        SpikedIdentity::project(a, &direction).map(|(_, r)| r / norm).unwrap_or(f64::INFINITY)
    };

    let mut scratch = Rk4Scratch::default();
    let mut deriv = vec![0.0; y.len()];
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut drift = 0.0f64;
    let mut max_resid = spiked_residual(&a0);
    let mut converged = false;
    loop {
        rhs(&y, &mut deriv);
        let rhs_norm = deriv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm < tol {
            converged = true;
            break;
        }
        if t >= t_max || !rhs_norm.is_finite() {
            break;
        }
        let a_norm_sq: f64 = y[..dd].iter().map(|v| v * v).sum();
        let h = (1e-3f64).min(0.05 / (1.0 + a_norm_sq)).min(t_max - t);
        rk4_step(&mut rhs, &mut y, h, &mut scratch);
        t += h;
        steps += 1;
        let (a, w) = split(&y);
        drift = drift.max(conserved_matrix(&a, &w).sub(&q0).frobenius());
        max_resid = max_resid.max(spiked_residual(&a));
    }

    let (a, w) = split(&y);
    let first = FirstLayer::Dense(SymMatrix::from_dense(a, 1e-6)?);
    Ok(FlowOutcome {
        params: TwoLayerParams::new(first, Vector::from(w))?,
        converged,
        time: t,
        steps,
        conserved_drift: drift,
        max_spiked_residual: max_resid,
    })
}

/// Ridge regression on the second layer with `A` frozen:
/// `w∞ = (A Σ_X A + λI)⁻¹ A (1/n) Xᵀ y`.
pub fn gd2_reg(lambda: f64, ds: &Dataset, first: &FirstLayer) -> Result<TwoLayerParams> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "second-layer ridge needs lambda > 0, got {lambda}"
        )));
    }
    check_dim(ds.d(), first.dim())?;
    let gram = first.sandwich(ds.covariance()).shifted(lambda);
    let rhs = first.matvec(&ds.xty());
    let w = cholesky_solve(&gram, &rhs)?;
    TwoLayerParams::new(first.clone(), w)
}
