//! Excess-risk evaluation: Monte Carlo estimates, the convex bias/variance split,
//! the exact convex lower bound, and grid search for sample complexity.
//!
//! Trial `k` of a query with seed `S` uses `S.child(k)`; within a trial, `child(0)`
//! draws the task sign and `child(1)` draws the dataset. Trials run on a
//! [`Workers`] pool but are collected and reduced in trial order, so estimates are
//! bit-identical for any number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{ConvexMethod, GdRegSpec, GdStepSpec};
use crate::error::{Error, Result};
use crate::linalg::{check_dim, Vector};
use crate::rand::{SeedSpec, Sign};
use crate::tasks::{sample_dataset, Dataset, MetaInstance};
use crate::twolayer::{gd2_reg, FirstLayer};

/// Default trial count for a single risk query.
pub const DEFAULT_RISK_TRIALS: usize = 2000;
/// Default trial count per grid point of a sample-complexity search.
pub const DEFAULT_SEARCH_TRIALS: usize = 400;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation (with `n − 1`) over `√trials`.
    pub stderr: f64,
    pub trials: usize,
}

impl RiskEstimate {
    /// Summarizes samples in order. Infinite samples (diverging iterations) give an
    /// infinite mean and standard error; NaN samples are rejected.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let trials = samples.len();
        if trials < 2 {
            return Err(Error::invalid(format!("need at least 2 trials, got {trials}")));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("risk sample is NaN"));
        }
        if samples.iter().any(|x| x.is_infinite()) {
            return Ok(RiskEstimate {
                mean: f64::INFINITY,
                stderr: f64::INFINITY,
                trials,
            });
        }
        let n = trials as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(RiskEstimate {
            mean,
            stderr: (var / n).sqrt(),
            trials,
        })
    }

    /// `mean + k · stderr`
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.stderr
    }
}

/// Thread pool for trial-level parallelism.
pub struct Workers {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers").field("threads", &self.threads).finish()
    }
}

impl Workers {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::invalid("need at least one worker"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        Ok(Workers { pool, threads })
    }

    /// One worker per available core.
    pub fn available() -> Result<Self> {
        Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// `(0..count).map(f)`, evaluated in parallel, returned in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

/// A within-task algorithm together with its initialization.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgSpec {
    GdStep { spec: GdStepSpec, w0: Vector },
    GdReg { spec: GdRegSpec, w0: Vector },
    /// Ridge on the second layer from `w = 0` with the first layer frozen.
    Gd2Reg { lambda: f64, first: FirstLayer },
}

impl AlgSpec {
    pub fn family(&self) -> &'static str {
        match self {
            AlgSpec::GdStep { .. } => "gd_step",
            AlgSpec::GdReg { .. } => "gd_reg",
            AlgSpec::Gd2Reg { .. } => "gd2_reg",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AlgSpec::GdStep { w0, .. } | AlgSpec::GdReg { w0, .. } => w0.dim(),
            AlgSpec::Gd2Reg { first, .. } => first.dim(),
        }
    }

    /// Parameters as a JSON object, for output records.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            AlgSpec::GdStep { spec, w0 } => serde_json::json!({
                "family": "gd_step", "eta": spec.eta, "t0": spec.t0, "w0_norm": w0.norm(),
            }),
            AlgSpec::GdReg { spec, w0 } => serde_json::json!({
                "family": "gd_reg", "lambda": spec.lambda, "w0_norm": w0.norm(),
            }),
            AlgSpec::Gd2Reg { lambda, first } => {
                let mut v = serde_json::json!({ "family": "gd2_reg", "lambda": lambda });
                if let FirstLayer::Spiked(s) = first {
                    v["alpha"] = s.spike().into();
                    v["kappa"] = s.bulk().into();
                }
                v
            }
        }
    }

    fn convex(&self) -> Option<(ConvexMethod, &Vector)> {
        match self {
            AlgSpec::GdStep { spec, w0 } => Some((ConvexMethod::GdStep(*spec), w0)),
            AlgSpec::GdReg { spec, w0 } => Some((ConvexMethod::GdReg(*spec), w0)),
            AlgSpec::Gd2Reg { .. } => None,
        }
    }

    /// The end-to-end linear predictor learned from `ds`.
    pub fn predictor(&self, ds: &Dataset) -> Result<Vector> {
        match self {
            AlgSpec::Gd2Reg { lambda, first } => Ok(gd2_reg(*lambda, ds, first)?.predictor()),
            _ => {
                let (method, w0) = self.convex().expect("convex family");
                method.run(ds, w0)
            }
        }
    }

    /// Population loss of the learned predictor minus `σ²`.
    pub fn excess_risk(&self, inst: &MetaInstance, sign: Sign, ds: &Dataset) -> Result<f64> {
        let w = self.predictor(ds)?;
        Ok(w.sub(&inst.task(sign).target()).norm_sq())
    }
}

/// Sign and dataset for one trial.
pub fn draw_trial(inst: &MetaInstance, n: usize, trial_seed: SeedSpec) -> Result<(Sign, Dataset)> {
    let sign = trial_seed.child(0).rng().sign();
    let ds = sample_dataset(&inst.task(sign), n, trial_seed.child(1))?;
    Ok((sign, ds))
}

fn check_query(algs: &[AlgSpec], inst: &MetaInstance, n: usize, trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::invalid(format!("need at least 2 trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    for alg in algs {
        check_dim(inst.d(), alg.dim())?;
    }
    Ok(())
}

/// Runs every algorithm on the same `(sign, dataset)` stream and returns one
/// estimate per algorithm.
pub fn mc_excess_risk_paired(
    algs: &[AlgSpec],
    inst: &MetaInstance,
    n: usize,
    trials: usize,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<Vec<RiskEstimate>> {
    check_query(algs, inst, n, trials)?;
    let rows: Vec<Result<Vec<f64>>> = workers.map(trials, |k| {
        let (sign, ds) = draw_trial(inst, n, seed.child(k as u64))?;
        algs.iter().map(|a| a.excess_risk(inst, sign, &ds)).collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    (0..algs.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            RiskEstimate::from_samples(&col)
        })
        .collect()
}

/// Monte Carlo estimate of the expected excess risk after `n` samples.
pub fn mc_excess_risk(
    alg: &AlgSpec,
    inst: &MetaInstance,
    n: usize,
    trials: usize,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<RiskEstimate> {
    Ok(mc_excess_risk_paired(std::slice::from_ref(alg), inst, n, trials, seed, workers)?[0])
}

/// Estimates of `‖(I − B_X)w*‖²` and `σ² tr(C_Xᵀ C_X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVariance {
    pub bias: RiskEstimate,
    pub variance: RiskEstimate,
}

impl BiasVariance {
    /// `bias + variance` with the two standard errors combined in quadrature.
    pub fn total(&self) -> RiskEstimate {
        RiskEstimate {
            mean: self.bias.mean + self.variance.mean,
            stderr: self.bias.stderr.hypot(self.variance.stderr),
            trials: self.bias.trials,
        }
    }
}

/// Per-trial bias and variance terms of a convex method, on the same trial seeds
/// as [`mc_excess_risk`].
pub fn decompose_bias_variance(
    alg: &AlgSpec,
    inst: &MetaInstance,
    n: usize,
    trials: usize,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<BiasVariance> {
    check_query(std::slice::from_ref(alg), inst, n, trials)?;
    let (method, _) = alg
        .convex()
        .ok_or_else(|| Error::Unsupported("bias/variance split needs a convex family".into()))?;
    let rows: Vec<Result<(f64, f64)>> = workers.map(trials, |k| {
        let (_, ds) = draw_trial(inst, n, seed.child(k as u64))?;
        method.bias_variance(&ds, inst.w_star(), inst.sigma())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let bias: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let var: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(BiasVariance {
        bias: RiskEstimate::from_samples(&bias)?,
        variance: RiskEstimate::from_samples(&var)?,
    })
}

/// Exact lower bound on the excess risk of any convex method with `n` samples:
///
/// ```text
/// n ≥ d:  d r² σ² / (r² n + σ² d)
/// n < d:  (n/d) r² σ² / (r² + σ²) + ((d − n)/d) r²
/// ```
///
/// `n = 0` gives `r²`. For `d = 0` there is nothing to learn and the result is 0.
pub fn convex_lower_bound_exact(d: usize, n: usize, r: f64, sigma: f64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let (r2, s2) = (r * r, sigma * sigma);
    let (df, nf) = (d as f64, n as f64);
    if n >= d {
        let denom = r2 * nf + s2 * df;
        if denom == 0.0 {
            0.0
        } else {
            df * r2 * s2 / denom
        }
    } else {
        let per_sample = if r2 + s2 == 0.0 { 0.0 } else { r2 * s2 / (r2 + s2) };
        nf / df * per_sample + (df - nf) / df * r2
    }
}

/// Smallest `n` with `convex_lower_bound_exact(d, n, r, σ) ≤ ε`.
pub fn convex_min_samples(d: usize, r: f64, sigma: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let (r2, s2) = (r * r, sigma * sigma);
    if epsilon >= r2 || d == 0 {
        return Ok(0);
    }
    let df = d as f64;
    let at_d = r2 * s2 / (r2 + s2);
    let guess = if epsilon >= at_d {
        df * (r2 - epsilon) * (r2 + s2) / (r2 * r2)
    } else {
        df * s2 * (1.0 / epsilon - 1.0 / r2)
    };
    let mut n = guess.ceil().max(0.0) as usize;
    while convex_lower_bound_exact(d, n, r, sigma) > epsilon {
        n += 1;
    }
    while n > 0 && convex_lower_bound_exact(d, n - 1, r, sigma) <= epsilon {
        n -= 1;
    }
    Ok(n)
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub estimate: RiskEstimate,
    /// `mean + 2·stderr ≤ ε`
    pub qualifies: bool,
}

/// Result of a sample-complexity search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub n_eps: Option<usize>,
    pub points: Vec<GridPoint>,
}

fn check_grid(grid: &[usize], epsilon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sample-size grid is empty"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample-size grid must be strictly ascending and positive"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Seed used for grid point `n`, so every algorithm sees the same data at each `n`.
pub fn grid_seed(seed: SeedSpec, n: usize) -> SeedSpec {
    seed.child(n as u64)
}

/// Smallest grid `n` whose estimate satisfies `mean + 2·stderr ≤ ε`. Stops at the
/// first qualifying point.
pub fn sample_complexity_search<F>(
    alg_builder: F,
    inst: &MetaInstance,
    epsilon: f64,
    n_grid: &[usize],
    trials: usize,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<SearchOutcome>
where
    F: Fn(usize) -> Result<AlgSpec>,
{
    let mut out = paired_sample_complexity_search(&[&alg_builder], inst, epsilon, n_grid, trials, seed, workers)?;
    Ok(out.remove(0))
}

/// [`sample_complexity_search`] for several algorithms sharing each grid point's
/// data. Each algorithm stops being evaluated once it qualifies.
pub fn paired_sample_complexity_search(
    builders: &[&dyn Fn(usize) -> Result<AlgSpec>],
    inst: &MetaInstance,
    epsilon: f64,
    n_grid: &[usize],
    trials: usize,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<Vec<SearchOutcome>> {
    check_grid(n_grid, epsilon)?;
    let mut outcomes: Vec<SearchOutcome> = builders
        .iter()
        .map(|_| SearchOutcome {
            n_eps: None,
            points: Vec::new(),
        })
        .collect();
    for &n in n_grid {
        let active: Vec<usize> = (0..builders.len()).filter(|&j| outcomes[j].n_eps.is_none()).collect();
        if active.is_empty() {
            break;
        }
        let algs = active.iter().map(|&j| builders[j](n)).collect::<Result<Vec<_>>>()?;
        let ests = mc_excess_risk_paired(&algs, inst, n, trials, grid_seed(seed, n), workers)?;
        for (&j, est) in active.iter().zip(ests) {
            let qualifies = est.upper(2.0) <= epsilon;
            outcomes[j].points.push(GridPoint {
                n,
                estimate: est,
                qualifies,
            });
            if qualifies {
                outcomes[j].n_eps = Some(n);
            }
        }
    }
    Ok(outcomes)
}

/// A risk query result as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub alg: serde_json::Value,
    pub d: usize,
    pub n: usize,
    pub r: f64,
    pub sigma: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RiskRecord {
    pub fn new(alg: &AlgSpec, inst: &MetaInstance, n: usize, est: &RiskEstimate, seed: SeedSpec) -> Self {
        RiskRecord {
            alg: alg.describe(),
            d: inst.d(),
            n,
            r: inst.r(),
            sigma: inst.sigma(),
            mean: est.mean,
            stderr: est.stderr,
            trials: est.trials,
            seed: seed.master_seed,
        }
    }
}
