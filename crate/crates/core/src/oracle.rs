//! Slow reference implementations used to cross-check the closed forms.
//!
//! Each routine here follows the defining iteration or ODE literally (explicit
//! loops, RK4 integration, dense matrices) and shares no solver code with the
//! closed forms it checks.

use crate::convex::{GdRegSpec, GdStepSpec};
use crate::linalg::{sym_eigen, Matrix, SpikedIdentity, SymMatrix, Vector, PINV_REL_TOL};
use crate::meta::ReptileSpec;
use crate::ode::{integrate_fixed, rk4_step, Rk4Scratch};
use crate::rand::Sign;
use crate::tasks::{Dataset, MetaInstance};
use crate::twolayer::{FirstLayer, ScalarPair};

/// RK4 integration of `dw/dt = −M w + b` to time `t` with step `h`.
pub fn linear_flow_rk4(m: &SymMatrix, b: &[f64], w0: &[f64], t: f64, h: f64) -> Vector {
    let y = integrate_fixed(
        |w, out| {
            let mw = m.matvec(w);
            for i in 0..w.len() {
                out[i] = b[i] - mw[i];
            }
        },
        w0,
        t,
        h,
    );
    Vector::from(y)
}

/// `t` explicit iterations of `w ← w − η (M w − b)`.
pub fn linear_step_iterate(m: &SymMatrix, b: &[f64], w0: &[f64], eta: f64, t: u64) -> Vector {
    let mut w = Vector::from(w0.to_vec());
    for _ in 0..t {
        let g = m.matvec(&w).sub(b);
        w.axpy(-eta, &g);
    }
    w
}

/// Literal gradient descent on `(1/n)‖Xw − y‖²` with the half-gradient
/// `(1/n) Xᵀ (Xw − y)`, evaluated from the raw rows each step.
pub fn gd_step_iterative(spec: &GdStepSpec, ds: &Dataset, w0: &[f64]) -> Vector {
    let n = ds.n() as f64;
    let mut w = Vector::from(w0.to_vec());
    for _ in 0..spec.t0 {
        let mut grad = Vector::zeros(ds.d());
        for i in 0..ds.n() {
            let row = ds.x().row(i);
            let resid: f64 = row.iter().zip(w.iter()).map(|(x, wj)| x * wj).sum::<f64>() - ds.labels()[i];
            grad.axpy(resid / n, row);
        }
        w.axpy(-spec.eta, &grad);
    }
    w
}

/// Integration horizon and step for a flow with matrix `m`:
/// `t_max = 50 / λ_min_nonzero`, `h = min(1e-3, 0.1/λ_max)`.
///
/// The spectrum only sizes the horizon; the flow itself is integrated numerically.
pub fn flow_schedule(m: &SymMatrix) -> (f64, f64) {
    let eig = sym_eigen(m).expect("finite symmetric matrix");
    let lmax = eig.lambda_max().max(1e-12);
    let cutoff = eig.zero_cutoff(PINV_REL_TOL);
    let lmin = eig
        .values
        .iter()
        .copied()
        .filter(|&l| l > cutoff)
        .fold(lmax, f64::min);
    (50.0 / lmin, (1e-3f64).min(0.1 / lmax))
}

/// RK4 gradient flow on the ridge objective, run to `50/λ_min`.
pub fn gd_reg_flow(spec: &GdRegSpec, ds: &Dataset, w0: &[f64]) -> Vector {
    let m = ds.covariance().shifted(spec.lambda);
    let (t_max, h) = flow_schedule(&m);
    linear_flow_rk4(&m, &ds.xty(), w0, t_max, h)
}

/// RK4 gradient flow on the second-layer ridge objective from `w = 0`.
pub fn gd2_reg_flow(lambda: f64, ds: &Dataset, first: &FirstLayer) -> Vector {
    let a = first.to_dense();
    let m = ds.covariance().sandwich(&a).shifted(lambda);
    let b = a.matvec(&ds.xty());
    let (t_max, h) = flow_schedule(&m);
    linear_flow_rk4(&m, &b, &vec![0.0; ds.d()], t_max, h)
}

/// Reptile carried out on dense matrices.
#[derive(Debug, Clone)]
pub struct MatrixReptileRun {
    /// `(ŵᵀ A_i ŵ, ŵᵀ w_i)` read off the dense iterates.
    pub states: Vec<ScalarPair>,
    pub first: Matrix,
    pub second: Vector,
    /// Largest relative distance of any `A_i` from spiked form.
    pub max_spiked_residual: f64,
}

/// Dense Reptile: each task's population-flow limit is formed in matrix space by
/// moving `A` and `w` along `ŵ` to the point on the conserved hyperbola where
/// `ŵᵀAᵀw = s r`, then both layers are interpolated densely.
pub fn reptile_matrix_run(spec: &ReptileSpec, inst: &MetaInstance, signs: &[Sign]) -> MatrixReptileRun {
    let d = inst.d();
    let u = inst.direction();
    let r = inst.r();
    let mut a = Matrix::identity(d).scaled(spec.kappa);
    let mut w = Vector::zeros(d);
    let read = |a: &Matrix, w: &Vector| ScalarPair::new(u.dot(&a.matvec(&u)), u.dot(w));
    let mut states = vec![read(&a, &w)];
    let mut worst = 0.0f64;
    for &s in signs {
        // conserved quantity along ŵ: ŵᵀ(AAᵀ − wwᵀ)ŵ
        let au = a.tr_matvec(&u);
        let c = au.norm_sq() - u.dot(&w).powi(2);
        let cur = read(&a, &w);
        let q = (2.0 * r).hypot(c);
        let a_bar_sq = if c >= 0.0 { 0.5 * (c + q) } else { 2.0 * r * r / (q - c) };
        let a_bar = a_bar_sq.sqrt();
        let b_bar = s.value() * r / a_bar;

        let mut a_lim = a.clone();
        a_lim.add_outer(a_bar - cur.a, &u, &u);
        let mut w_lim = w.clone();
        w_lim.axpy(b_bar - cur.b, &u);

        a = a.scaled(1.0 - spec.tau).add(&a_lim.scaled(spec.tau));
        w = w.scaled(1.0 - spec.tau).add(&w_lim.scaled(spec.tau));
        let (_, resid) = SpikedIdentity::project(&a, &u).expect("unit direction");
        worst = worst.max(resid / a.frobenius());
        states.push(read(&a, &w));
    }
    MatrixReptileRun {
        states,
        first: a,
        second: w,
        max_spiked_residual: worst,
    }
}

/// Dense joint flow result.
#[derive(Debug, Clone)]
pub struct JointFlowResult {
    pub first: Matrix,
    pub seconds: Vec<Vector>,
    pub converged: bool,
    pub time: f64,
}

/// RK4 gradient flow on `(1/T) Σ ‖Aᵀ w_i − s_i w*‖²` (half-gradient convention) from
/// `(κI, 0, …, 0)`:
///
/// ```text
/// dA/dt   = (1/T) Σ w_i (s_i w* − Aᵀ w_i)ᵀ
/// dw_i/dt = (1/T) A (s_i w* − Aᵀ w_i)
/// ```
pub fn replearn_joint_flow(kappa: f64, inst: &MetaInstance, signs: &[Sign], t_max: f64, tol: f64) -> JointFlowResult {
    let d = inst.d();
    let dd = d * d;
    let tn = signs.len();
    let targets: Vec<Vector> = signs.iter().map(|s| inst.w_star().scaled(s.value())).collect();
    let inv_t = 1.0 / tn as f64;

    let mut y = Matrix::identity(d).scaled(kappa).as_slice().to_vec();
    y.resize(dd + tn * d, 0.0);

    let mut rhs = |y: &[f64], out: &mut [f64]| {
        let a = &y[..dd];
        out[..dd].iter_mut().for_each(|v| *v = 0.0);
        for k in 0..tn {
            let w = &y[dd + k * d..dd + (k + 1) * d];
            let mut resid = targets[k].to_vec();
            for i in 0..d {
                for j in 0..d {
                    resid[j] -= a[i * d + j] * w[i];
                }
            }
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += inv_t * w[i] * resid[j];
                }
            }
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += a[i * d + j] * resid[j];
                }
                out[dd + k * d + i] = inv_t * acc;
            }
        }
    };

    let mut scratch = Rk4Scratch::default();
    let mut deriv = vec![0.0; y.len()];
    let mut t = 0.0;
    let mut converged = false;
    loop {
        rhs(&y, &mut deriv);
        if deriv.iter().map(|v| v * v).sum::<f64>().sqrt() < tol {
            converged = true;
            break;
        }
        if t >= t_max {
            break;
        }
        let a_sq: f64 = y[..dd].iter().map(|v| v * v).sum();
        let h = (1e-2f64).min(0.05 / (1.0 + a_sq)).min(t_max - t);
        rk4_step(&mut rhs, &mut y, h, &mut scratch);
        t += h;
    }
    JointFlowResult {
        first: Matrix::from_row_major(d, d, y[..dd].to_vec()).expect("square"),
        seconds: (0..tn)
            .map(|k| Vector::from(y[dd + k * d..dd + (k + 1) * d].to_vec()))
            .collect(),
        converged,
        time: t,
    }
}
