//! Closed-form versus reference cross-checks behind `metasep verify`.
//!
//! Each suite draws random cases from its own stream, runs the fast solver and the
//! slow oracle from `crate::oracle`, and reports the worst normalized residual.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::output::OutputDir;
use super::{echo, resolve, stream, Command, RunOptions, RunReport, DEFAULT_SEED};
use crate::convex::{gd_reg, gd_step, linear_flow_solve, linear_step_solve, GdRegSpec, GdStepSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_solve, pinv_apply, spiked_solve, spiked_to_dense, sym_eigen, Matrix, SpikedIdentity, SymMatrix,
    PINV_REL_TOL,
};
use crate::meta::{reptile_trajectory, run_replearn, ReptileSpec};
use crate::oracle;
use crate::rand::{hash_mix, rademacher_signs, SeedSpec, StreamRng};
use crate::risk::{draw_trial, Workers};
use crate::tasks::{Dataset, MetaInstance};
use crate::twolayer::{gd2_reg, gd_pop_fixed_point, gd_pop_flow_numeric, FirstLayer, ScalarPair, TwoLayerParams, FLOW_T_MAX, FLOW_TOL};

/// Config for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "VerifyConfig::default_seed")]
    pub seed: u64,
    /// Base case count; some suites scale it up or down.
    #[serde(default = "VerifyConfig::default_cases")]
    pub cases: usize,
    /// Run only these suites (all when empty).
    #[serde(default)]
    pub only: Vec<String>,
}

impl VerifyConfig {
    fn default_seed() -> u64 {
        DEFAULT_SEED
    }
    fn default_cases() -> usize {
        200
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: DEFAULT_SEED,
            cases: 200,
            only: Vec::new(),
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Inputs shared by every suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteParams {
    pub cases: usize,
    pub seed: u64,
    /// Perturb every closed-form output by a relative 1e-3; the suites must then fail.
    pub inject_fault: bool,
}

impl SuiteParams {
    pub fn new(cases: usize, seed: u64) -> Self {
        SuiteParams {
            cases,
            seed,
            inject_fault: false,
        }
    }

    fn factor(&self) -> f64 {
        if self.inject_fault {
            1.0 + 1e-3
        } else {
            1.0
        }
    }

    fn case_seed(&self, suite: usize, case: usize) -> SeedSpec {
        SeedSpec::new(self.seed, hash_mix(stream::VERIFY, suite as u64)).child(case as u64)
    }
}

/// Suite names in run order.
pub const SUITES: [&str; 12] = [
    "gd_step",
    "gd_reg",
    "linear_flow",
    "linear_step",
    "fixed_point",
    "gd_pop_flow",
    "gd2_reg",
    "replearn",
    "reptile_matrix",
    "eigen",
    "spiked_solve",
    "pinv",
];

fn rel(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = got.iter().zip(want).fold(0.0f64, |m, (g, w)| m.max((g - w).abs()));
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    diff / scale
}

fn dim(rng: &mut StreamRng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

fn random_dataset(rng: &mut StreamRng, seed: SeedSpec) -> Result<(MetaInstance, Dataset)> {
    let d = dim(rng, 1, 8);
    let n = dim(rng, 1, 16);
    let inst = MetaInstance::new(rng.normal_vector(d), rng.uniform_in(0.1, 1.0))?;
    let (_, ds) = draw_trial(&inst, n, seed.child(1))?;
    Ok((inst, ds))
}

/// `B Bᵀ / k` with `B` a `d × k` Gaussian matrix; rank-deficient when `k < d`.
fn random_psd(rng: &mut StreamRng, d: usize, k: usize) -> SymMatrix {
    let b = Matrix::from_fn(k, d, |_, _| rng.std_normal());
    b.gram(1.0 / k as f64)
}

fn run_cases<F>(
    names: &[(&str, f64)],
    cases: usize,
    workers: &Workers,
    f: F,
) -> Result<Vec<SuiteReport>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let results = workers.map(cases, &f);
    let mut worst = vec![0.0f64; names.len()];
    for r in results {
        let r = r?;
        debug_assert_eq!(r.len(), names.len());
        for (w, v) in worst.iter_mut().zip(r) {
            *w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
        }
    }
    Ok(names
        .iter()
        .zip(worst)
        .map(|(&(name, tol), max_residual)| SuiteReport {
            name: name.into(),
            cases,
            max_residual,
            tolerance: tol,
            passed: max_residual <= tol,
        })
        .collect())
}

/// Runs one named suite.
pub fn run_suite(name: &str, p: &SuiteParams, workers: &Workers) -> Result<Vec<SuiteReport>> {
    let idx = SUITES
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| Error::Config(format!("unknown suite \"{name}\"")))?;
    let f = p.factor();
    let seed = |case| p.case_seed(idx, case);
    let base = p.cases.max(1);
    match name {
        "gd_step" => run_cases(&[("gd_step", 1e-8)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let (_, ds) = random_dataset(&mut rng, seed(c))?;
            let lmax = ds.covariance_eigen()?.lambda_max().max(1e-12);
            let spec = GdStepSpec::new(rng.uniform_in(0.1, 0.95) / lmax, dim(&mut rng, 0, 200) as u64)?;
            let w0 = rng.normal_vector(ds.d());
            let fast = gd_step(&spec, &ds, &w0)?.scaled(f);
            Ok(vec![rel(&fast, &oracle::gd_step_iterative(&spec, &ds, &w0))])
        }),
        "gd_reg" => run_cases(&[("gd_reg", 1e-6)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let (_, ds) = random_dataset(&mut rng, seed(c))?;
            let spec = GdRegSpec::new(rng.uniform_in(0.25, 2.0))?;
            let w0 = rng.normal_vector(ds.d());
            let fast = gd_reg(&spec, &ds, &w0)?.scaled(f);
            Ok(vec![rel(&fast, &oracle::gd_reg_flow(&spec, &ds, &w0))])
        }),
        "linear_flow" => run_cases(&[("linear_flow", 1e-8)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let d = dim(&mut rng, 1, 6);
            let k = dim(&mut rng, 1, d + 2);
            let m = random_psd(&mut rng, d, k);
            let b = m.matvec(&rng.normal_vector(d));
            let w0 = rng.normal_vector(d);
            let t = rng.uniform_in(0.0, 5.0);
            let h = (1e-3f64).min(0.02 / sym_eigen(&m)?.lambda_max().max(1e-12));
            let fast = linear_flow_solve(&m, &b, &w0, t)?.scaled(f);
            Ok(vec![rel(&fast, &oracle::linear_flow_rk4(&m, &b, &w0, t, h))])
        }),
        "linear_step" => run_cases(&[("linear_step", 1e-10)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let d = dim(&mut rng, 1, 6);
            let k = dim(&mut rng, 1, d + 2);
            let m = random_psd(&mut rng, d, k);
            let lmax = sym_eigen(&m)?.lambda_max().max(1e-12);
            let b = m.matvec(&rng.normal_vector(d));
            let w0 = rng.normal_vector(d);
            let eta = rng.uniform_in(0.1, 1.9) / lmax;
            let t = dim(&mut rng, 0, 300) as u64;
            let fast = linear_step_solve(&m, &b, &w0, eta, t)?.scaled(f);
            Ok(vec![rel(&fast, &oracle::linear_step_iterate(&m, &b, &w0, eta, t))])
        }),
        "fixed_point" => run_cases(&[("fixed_point", 1e-12)], 50 * base, workers, |c| {
            let mut rng = seed(c).rng();
            let a = rng.uniform_in(0.0, 5.0);
            let b = rng.uniform_in(0.0, a);
            let r = rng.uniform_in(0.1, 5.0);
            let s = rng.sign();
            let start = ScalarPair::new(a, b);
            let fp = gd_pop_fixed_point(start, r, s);
            let fp = ScalarPair::new(fp.a * f, fp.b);
            let c0 = start.conserved();
            let hyper = (fp.conserved() - c0).abs() / fp.a.powi(2).max(1.0);
            let product = (fp.a * fp.b - s.value() * r).abs() / r.max(1.0);
            Ok(vec![hyper.max(product)])
        }),
        "gd_pop_flow" => run_cases(
            &[("gd_pop_flow", 1e-6), ("gd_pop_conserved", 1e-8), ("gd_pop_spiked", 1e-8)],
            (base / 4).max(1),
            workers,
            |c| {
                let mut rng = seed(c).rng();
                let inst = MetaInstance::new(rng.normal_vector(3).normalized()?.scaled(rng.uniform_in(0.5, 2.0)), 0.0)?;
                let u = inst.direction();
                let a = rng.uniform_in(0.1, 1.5);
                let b = rng.uniform_in(0.0, a);
                let kappa = rng.uniform_in(0.05, 0.5);
                let sign = rng.sign();
                let params = TwoLayerParams::new(FirstLayer::Spiked(SpikedIdentity::new(&u, a, kappa)?), u.scaled(b))?;
                let out = gd_pop_flow_numeric(&params, &inst.task(sign), FLOW_T_MAX, FLOW_TOL)?;
                let fp = gd_pop_fixed_point(ScalarPair::new(a, b), inst.r(), sign);
                let got_a = u.dot(&out.params.first.matvec(&u));
                let got_b = u.dot(&out.params.second);
                let err = (got_a - f * fp.a).abs().max((got_b - fp.b).abs());
                let err = if out.converged { err } else { f64::INFINITY };
                Ok(vec![err, out.conserved_drift, out.max_spiked_residual])
            },
        ),
        "gd2_reg" => run_cases(&[("gd2_reg", 1e-6)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let (inst, ds) = random_dataset(&mut rng, seed(c))?;
            let first = FirstLayer::Spiked(SpikedIdentity::new(
                &inst.direction(),
                rng.uniform_in(0.5, 3.0),
                rng.uniform_in(0.1, 1.0),
            )?);
            let lambda = rng.uniform_in(0.25, 2.0);
            let fast = gd2_reg(lambda, &ds, &first)?.second.scaled(f);
            Ok(vec![rel(&fast, &oracle::gd2_reg_flow(lambda, &ds, &first))])
        }),
        "replearn" => run_cases(&[("replearn", 1e-5)], (base / 40).max(1), workers, |c| {
            let mut rng = seed(c).rng();
            let inst = MetaInstance::new(rng.normal_vector(4).normalized()?.scaled(rng.uniform_in(0.5, 1.5)), 0.0)?;
            let signs = rademacher_signs(seed(c).child(1), 3);
            let sol = run_replearn(3.0, 0.1, &inst)?;
            let flow = oracle::replearn_joint_flow(0.1, &inst, &signs, 1e4, 1e-12);
            if !flow.converged {
                return Ok(vec![f64::INFINITY]);
            }
            let dense = sol.first.to_dense().into_matrix().scaled(f);
            let mut err = flow.first.sub(&dense).frobenius();
            for (w, want) in flow.seconds.iter().zip(sol.second_layers(&signs)) {
                err = err.max(w.max_abs_diff(&want));
            }
            Ok(vec![err])
        }),
        "reptile_matrix" => run_cases(&[("reptile_matrix", 1e-10)], (base / 10).max(1), workers, |c| {
            let mut rng = seed(c).rng();
            let inst = MetaInstance::new(rng.normal_vector(6), 0.0)?;
            let spec = ReptileSpec::new(rng.uniform_in(0.05, 0.5), rng.uniform_in(0.05, 0.3), 20)?;
            let signs = rademacher_signs(seed(c).child(1), 20);
            let scalar = reptile_trajectory(&spec, inst.r(), signs.clone());
            let matrix = oracle::reptile_matrix_run(&spec, &inst, &signs);
            let mut err = matrix.max_spiked_residual;
            for (p, q) in scalar.states.iter().zip(&matrix.states) {
                err = err.max((f * p.a - q.a).abs()).max((p.b - q.b).abs());
            }
            Ok(vec![err])
        }),
        "eigen" => run_cases(&[("eigen", 1e-10)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let d = dim(&mut rng, 1, 8);
            let m = SymMatrix::from_fn(d, |_, _| rng.std_normal());
            let eig = sym_eigen(&m)?;
            let vals: Vec<f64> = eig.values.iter().map(|v| v * f).collect();
            let err = eig.matrix_from_diag(&vals).as_matrix().sub(m.as_matrix()).frobenius() / m.frobenius().max(1e-300);
            Ok(vec![err.max(eig.orthogonality_residual())])
        }),
        "spiked_solve" => run_cases(&[("spiked_solve", 1e-12)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let d = dim(&mut rng, 1, 8);
            let s = SpikedIdentity::new(&rng.normal_vector(d), rng.uniform_in(0.2, 3.0), rng.uniform_in(0.2, 3.0))?;
            let shift = rng.uniform_in(0.0, 1.0);
            let v = rng.normal_vector(d);
            let fast = spiked_solve(&s, shift, &v)?.scaled(f);
            let dense = cholesky_solve(&spiked_to_dense(&s).shifted(shift), &v)?;
            Ok(vec![rel(&fast, &dense)])
        }),
        "pinv" => run_cases(&[("pinv", 1e-8)], base, workers, |c| {
            let mut rng = seed(c).rng();
            let d = dim(&mut rng, 2, 8);
            let k = dim(&mut rng, 1, d - 1);
            let m = random_psd(&mut rng, d, k);
            let b = m.matvec(&rng.normal_vector(d));
            let x = pinv_apply(&m, &b, PINV_REL_TOL)?.scaled(f);
            let resid = m.matvec(&x).sub(&b);
            Ok(vec![resid.norm() / b.norm().max(1.0)])
        }),
        _ => unreachable!("name checked above"),
    }
}

/// Runs the selected suites (all when `only` is empty).
pub fn run_suites(only: &[String], p: &SuiteParams, workers: &Workers) -> Result<Vec<SuiteReport>> {
    for name in only {
        if !SUITES.contains(&name.as_str()) {
            return Err(Error::Config(format!("unknown suite \"{name}\"")));
        }
    }
    let mut out = Vec::new();
    for name in SUITES {
        if only.is_empty() || only.iter().any(|o| o == name) {
            out.extend(run_suite(name, p, workers)?);
        }
    }
    Ok(out)
}

pub(super) fn verify_cmd(opts: &RunOptions, workers: &Workers) -> Result<RunReport> {
    let cfg: VerifyConfig = resolve(Command::Verify, opts)?;
    if cfg.cases == 0 {
        return Err(Error::Config("verify needs cases >= 1".into()));
    }
    let params = SuiteParams {
        cases: cfg.cases,
        seed: cfg.seed,
        inject_fault: opts.inject_fault,
    };
    let reports = run_suites(&cfg.only, &params, workers)?;
    let passed = reports.iter().all(|r| r.passed);
    let mut echoed = echo(Command::Verify, &cfg);
    echoed["inject_fault"] = opts.inject_fault.into();
    let mut out = OutputDir::create(&opts.out, echoed)?;
    out.write_json("verify.json", json!({ "suites": reports, "passed": passed }))?;
    let lines = reports
        .iter()
        .map(|r| {
            format!(
                "{} {} cases={} max_residual={:e} tolerance={:e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.cases,
                r.max_residual,
                r.tolerance
            )
        })
        .collect();
    Ok(RunReport {
        command: Command::Verify,
        outputs: out.finish()?,
        passed,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_small() {
        let w = Workers::new(2).unwrap();
        let reports = run_suites(&[], &SuiteParams::new(8, 3), &w).unwrap();
        assert_eq!(reports.len(), SUITES.len() + 2);
        for r in &reports {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn fault_is_detected() {
        let w = Workers::new(2).unwrap();
        let mut p = SuiteParams::new(8, 3);
        p.inject_fault = true;
        for name in ["gd_step", "fixed_point", "eigen", "spiked_solve", "pinv", "linear_step"] {
            let reports = run_suite(name, &p, &w).unwrap();
            assert!(reports.iter().all(|r| !r.passed), "{name}");
        }
    }

    #[test]
    fn unknown_suite() {
        let w = Workers::new(1).unwrap();
        assert!(matches!(run_suite("nope", &SuiteParams::new(1, 0), &w), Err(Error::Config(_))));
    }
}
