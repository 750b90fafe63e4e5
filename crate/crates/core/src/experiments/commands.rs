//! `dynamics`, `growth`, `separation`, `risk` and `nsearch`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::output::{fmt_f64, OutputDir};
use super::{echo, resolve, stream, Command, RunOptions, RunReport, DEFAULT_SEED};
use crate::convex::{GdRegSpec, GdStepSpec};
use crate::error::{Error, Result};
use crate::linalg::{SpikedIdentity, SymMatrix, Vector};
use crate::meta::{
    reptile_final_a, reptile_fluctuation_bound, reptile_growth_bound, reptile_tau_schedule,
    reptile_trajectory, run_replearn, run_reptile, ReptileSpec, ScalarTrajectory,
};
use crate::rand::{hash_mix, rademacher_signs, SeedSpec};
use crate::risk::{
    convex_lower_bound_exact, convex_min_samples, mc_excess_risk, paired_sample_complexity_search,
    sample_complexity_search, AlgSpec, RiskRecord, SearchOutcome, Workers,
};
use crate::tasks::{InstanceConfig, MetaInstance, WStarSpec};
use crate::twolayer::{gd_pop_fixed_point, FirstLayer};

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn one() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    crate::meta::DEFAULT_KAPPA
}
fn e1() -> WStarSpec {
    WStarSpec::Named("e1".into())
}

// ---------------------------------------------------------------- dynamics

/// Reptile trajectory in reduced coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "DynamicsConfig::default_tau")]
    pub tau: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "DynamicsConfig::default_t")]
    pub t_tasks: u64,
    /// Failure probability for the reported `|b_i|` envelope.
    #[serde(default = "DynamicsConfig::default_delta")]
    pub delta: f64,
}

impl DynamicsConfig {
    fn default_tau() -> f64 {
        0.3
    }
    fn default_t() -> u64 {
        1000
    }
    fn default_delta() -> f64 {
        0.05
    }
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("defaults")
    }
}

/// Runs the scalar Reptile recursion with signs from the dynamics stream.
pub fn run_dynamics(cfg: &DynamicsConfig) -> Result<ScalarTrajectory> {
    if !(cfg.r > 0.0) {
        return Err(Error::invalid(format!("r must be positive, got {}", cfg.r)));
    }
    let spec = ReptileSpec::new(cfg.tau, cfg.kappa, cfg.t_tasks)?;
    let len = usize::try_from(cfg.t_tasks).map_err(|_| Error::invalid("t_tasks too large"))?;
    let signs = rademacher_signs(SeedSpec::new(cfg.seed, hash_mix(stream::DYNAMICS, 0)), len);
    Ok(reptile_trajectory(&spec, cfg.r, signs))
}

pub(super) fn dynamics_cmd(opts: &RunOptions) -> Result<RunReport> {
    let cfg: DynamicsConfig = resolve(Command::Dynamics, opts)?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {}", cfg.delta)));
    }
    let tr = run_dynamics(&cfg)?;
    let mut out = OutputDir::create(&opts.out, echo(Command::Dynamics, &cfg))?;

    let rows: Vec<Vec<String>> = tr
        .states
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = if i == 0 { 0 } else { tr.signs[i - 1].as_i8() };
            vec![i.to_string(), s.to_string(), fmt_f64(p.a), fmt_f64(p.b)]
        })
        .collect();
    out.write_csv("dynamics.csv", &["i", "s_i", "a_i", "b_i"], &rows)?;

    // One-step geometry: from state i the next fixed point lies on a·b = s_{i+1}·r
    // and on the hyperbola a² − b² = c_i.
    let geometry: Vec<Vec<String>> = tr
        .signs
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let st = tr.states[i];
            let fp = gd_pop_fixed_point(st, cfg.r, s);
            vec![
                i.to_string(),
                fmt_f64(st.conserved()),
                s.as_i8().to_string(),
                fmt_f64(fp.a),
                fmt_f64(fp.b),
            ]
        })
        .collect();
    out.write_csv("dynamics_geometry.csv", &["i", "c_i", "s_next", "fixed_a", "fixed_b"], &geometry)?;

    let last = tr.last();
    let envelope = if cfg.t_tasks > 0 {
        Some(reptile_fluctuation_bound(cfg.r, cfg.tau, cfg.t_tasks, cfg.delta))
    } else {
        None
    };
    let b_mean = tr.states.iter().map(|p| p.b).sum::<f64>() / tr.states.len() as f64;
    let summary = json!({
        "t_tasks": cfg.t_tasks,
        "a_final": last.a,
        "b_final": last.b,
        "a_nondecreasing": tr.a_nondecreasing(),
        "max_abs_ab": tr.max_abs_product(),
        "max_abs_b": tr.max_abs_b(),
        "b_envelope": envelope,
        "b_mean": b_mean,
        "b_sign_changes": tr.states.windows(2).filter(|w| w[0].b * w[1].b < 0.0).count(),
    });
    out.write_json("dynamics_summary.json", summary)?;
    let lines = vec![format!(
        "dynamics: T={} a_T={} max|b|={} a nondecreasing={}",
        cfg.t_tasks,
        last.a,
        tr.max_abs_b(),
        tr.a_nondecreasing()
    )];
    Ok(RunReport {
        command: Command::Dynamics,
        outputs: out.finish()?,
        passed: true,
        lines,
    })
}

// ---------------------------------------------------------------- growth

/// Growth of `a_T` against its high-probability lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "GrowthConfig::default_delta")]
    pub delta: f64,
    #[serde(default = "GrowthConfig::default_t_values")]
    pub t_values: Vec<u64>,
    /// Independent sign sequences per `T`.
    #[serde(default = "GrowthConfig::default_seeds")]
    pub seeds: usize,
}

impl GrowthConfig {
    fn default_delta() -> f64 {
        0.1
    }
    fn default_t_values() -> Vec<u64> {
        vec![1_000, 10_000, 100_000]
    }
    fn default_seeds() -> usize {
        20
    }
}

impl Default for GrowthConfig {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("defaults")
    }
}

/// One `(T, seed)` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t: u64,
    pub tau: f64,
    pub seed: usize,
    pub a_t: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Seed of run `j` at horizon `T`.
pub fn growth_seed(master: u64, t: u64, j: usize) -> SeedSpec {
    SeedSpec::new(master, hash_mix(hash_mix(stream::GROWTH, t), j as u64))
}

/// All `(T, seed)` rows in `(T, seed)` order.
pub fn growth_rows(cfg: &GrowthConfig, workers: &Workers) -> Result<Vec<GrowthRow>> {
    if cfg.t_values.is_empty() || cfg.seeds == 0 {
        return Err(Error::Config("growth needs at least one T and one seed".into()));
    }
    if !(cfg.r > 0.0) {
        return Err(Error::invalid(format!("r must be positive, got {}", cfg.r)));
    }
    let mut rows = Vec::new();
    for &t in &cfg.t_values {
        let tau = reptile_tau_schedule(t, cfg.delta)?;
        let spec = ReptileSpec::new(tau, cfg.kappa, t)?;
        let bound = reptile_growth_bound(cfg.r, tau, t, cfg.delta);
        let finals = workers.map(cfg.seeds, |j| reptile_final_a(&spec, cfg.r, growth_seed(cfg.seed, t, j)));
        for (j, a_t) in finals.into_iter().enumerate() {
            rows.push(GrowthRow {
                t,
                tau,
                seed: j,
                a_t,
                bound,
                satisfied: a_t >= bound,
            });
        }
    }
    Ok(rows)
}

/// Fraction of satisfied rows per `T`, in `t_values` order.
pub fn satisfaction_by_t(cfg: &GrowthConfig, rows: &[GrowthRow]) -> Vec<(u64, f64)> {
    cfg.t_values
        .iter()
        .map(|&t| {
            let sel: Vec<&GrowthRow> = rows.iter().filter(|r| r.t == t).collect();
            let ok = sel.iter().filter(|r| r.satisfied).count();
            (t, ok as f64 / sel.len() as f64)
        })
        .collect()
}

pub fn run_growth(cfg: &GrowthConfig, workers: &Workers) -> Result<(Vec<GrowthRow>, Vec<(u64, f64)>)> {
    let rows = growth_rows(cfg, workers)?;
    let frac = satisfaction_by_t(cfg, &rows);
    Ok((rows, frac))
}

pub(super) fn growth_cmd(opts: &RunOptions, workers: &Workers) -> Result<RunReport> {
    let cfg: GrowthConfig = resolve(Command::Growth, opts)?;
    if cfg.t_values.iter().any(|&t| t < 2) {
        return Err(Error::Config("every T must be at least 2".into()));
    }
    let (rows, frac) = run_growth(&cfg, workers)?;
    let mut out = OutputDir::create(&opts.out, echo(Command::Growth, &cfg))?;
    let mut csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                fmt_f64(r.tau),
                r.seed.to_string(),
                fmt_f64(r.a_t),
                fmt_f64(r.bound),
                r.satisfied.to_string(),
            ]
        })
        .collect();
    let total = rows.iter().filter(|r| r.satisfied).count() as f64 / rows.len() as f64;
    // summary row: seed column "all", a_T column holds the minimum, satisfied holds the fraction
    let min_a = rows.iter().map(|r| r.a_t).fold(f64::INFINITY, f64::min);
    csv.push(vec![
        "all".into(),
        String::new(),
        "all".into(),
        fmt_f64(min_a),
        String::new(),
        fmt_f64(total),
    ]);
    out.write_csv("growth.csv", &["T", "tau", "seed", "a_T", "bound", "satisfied"], &csv)?;
    let per_t: Vec<Value> = frac
        .iter()
        .map(|(t, f)| json!({ "T": t, "satisfied_fraction": f }))
        .collect();
    out.write_json(
        "growth_summary.json",
        json!({ "per_T": per_t, "satisfied_fraction": total, "target_fraction": 1.0 - cfg.delta }),
    )?;
    let lines = frac
        .iter()
        .map(|(t, f)| format!("growth: T={t} satisfied fraction={f}"))
        .collect();
    Ok(RunReport {
        command: Command::Growth,
        outputs: out.finish()?,
        passed: true,
        lines,
    })
}

// ---------------------------------------------------------------- separation

/// Convex versus two-layer sample complexity at one accuracy target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "SeparationConfig::default_d")]
    pub d: usize,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "e1")]
    pub w_star: WStarSpec,
    #[serde(default = "SeparationConfig::default_epsilon")]
    pub epsilon: f64,
    /// Trials per grid point.
    #[serde(default = "SeparationConfig::default_trials")]
    pub trials: usize,
    #[serde(default = "SeparationConfig::default_convex_grid")]
    pub convex_grid: Vec<usize>,
    /// Ridge weights tried from `w0 = 0`.
    #[serde(default = "SeparationConfig::default_convex_lambdas")]
    pub convex_lambdas: Vec<f64>,
    /// Also try unregularized flow started at `w0 = w*`.
    #[serde(default = "SeparationConfig::default_true")]
    pub convex_w_star_init: bool,
    #[serde(default = "SeparationConfig::default_nonconvex_grid")]
    pub nonconvex_grid: Vec<usize>,
    /// Task count fed to the RepLearn closed form.
    #[serde(default = "SeparationConfig::default_replearn_t")]
    pub replearn_t: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Second-layer ridge weight is `α^lambda_exponent`.
    #[serde(default = "SeparationConfig::default_lambda_exponent")]
    pub lambda_exponent: f64,
    /// Reptile task count for the extra Reptile row; 0 skips it.
    #[serde(default = "SeparationConfig::default_reptile_t")]
    pub reptile_t: u64,
    #[serde(default = "SeparationConfig::default_reptile_delta")]
    pub reptile_delta: f64,
}

impl SeparationConfig {
    fn default_d() -> usize {
        50
    }
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_trials() -> usize {
        crate::risk::DEFAULT_SEARCH_TRIALS
    }
    fn default_convex_grid() -> Vec<usize> {
        vec![50, 100, 200, 400, 600, 800, 900]
    }
    fn default_convex_lambdas() -> Vec<f64> {
        vec![0.0, 0.01, 0.06, 0.3, 1.0]
    }
    fn default_true() -> bool {
        true
    }
    fn default_nonconvex_grid() -> Vec<usize> {
        vec![20, 40, 60, 80, 100]
    }
    fn default_replearn_t() -> f64 {
        1e16
    }
    fn default_lambda_exponent() -> f64 {
        1.5
    }
    fn default_reptile_t() -> u64 {
        1_000_000
    }
    fn default_reptile_delta() -> f64 {
        0.1
    }

    pub fn instance(&self) -> Result<MetaInstance> {
        InstanceConfig {
            d: self.d,
            r: self.r,
            sigma: self.sigma,
            w_star: self.w_star.clone(),
        }
        .build()
    }
}

impl Default for SeparationConfig {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("defaults")
    }
}

/// A convex configuration and its search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexOutcome {
    pub alg: Value,
    #[serde(flatten)]
    pub search: SearchOutcome,
}

/// Search result for a two-layer pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconvexOutcome {
    pub meta_learner: String,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_tasks: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(flatten)]
    pub search: SearchOutcome,
}

/// Both sides of the separation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Smallest qualifying `n` over all convex configurations.
    pub convex_n_eps: Option<usize>,
    /// Smallest `n` allowed by the exact convex lower bound.
    pub convex_lower_bound_n: usize,
    /// Exact lower bound at each convex grid point.
    pub convex_lower_bound: Vec<(usize, f64)>,
    pub convex: Vec<ConvexOutcome>,
    pub nonconvex_n_eps: Option<usize>,
    pub nonconvex: Vec<NonconvexOutcome>,
}

fn gd2_pipeline(
    label: &str,
    first: SpikedIdentity,
    t_tasks: f64,
    tau: Option<f64>,
    cfg: &SeparationConfig,
    inst: &MetaInstance,
    seed: SeedSpec,
    workers: &Workers,
) -> Result<NonconvexOutcome> {
    let alpha = first.spike();
    let lambda = alpha.powf(cfg.lambda_exponent);
    let alg = AlgSpec::Gd2Reg {
        lambda,
        first: FirstLayer::Spiked(first),
    };
    let search = sample_complexity_search(
        |_| Ok(alg.clone()),
        inst,
        cfg.epsilon,
        &cfg.nonconvex_grid,
        cfg.trials,
        seed,
        workers,
    )?;
    Ok(NonconvexOutcome {
        meta_learner: label.into(),
        alpha,
        t_tasks,
        lambda,
        tau,
        search,
    })
}

pub fn run_separation(cfg: &SeparationConfig, workers: &Workers) -> Result<SeparationReport> {
    let inst = cfg.instance()?;
    let d = inst.d();
    let seed = SeedSpec::new(cfg.seed, hash_mix(stream::SEPARATION, 0));

    let mut convex_algs: Vec<AlgSpec> = Vec::new();
    for &lambda in &cfg.convex_lambdas {
        convex_algs.push(AlgSpec::GdReg {
            spec: GdRegSpec::new(lambda)?,
            w0: Vector::zeros(d),
        });
    }
    if cfg.convex_w_star_init {
        convex_algs.push(AlgSpec::GdReg {
            spec: GdRegSpec::new(0.0)?,
            w0: inst.w_star().clone(),
        });
    }
    let builders: Vec<Box<dyn Fn(usize) -> Result<AlgSpec>>> = convex_algs
        .iter()
        .map(|a| {
            let a = a.clone();
            Box::new(move |_: usize| Ok(a.clone())) as Box<dyn Fn(usize) -> Result<AlgSpec>>
        })
        .collect();
    let refs: Vec<&dyn Fn(usize) -> Result<AlgSpec>> = builders.iter().map(|b| b.as_ref()).collect();
    let searches = paired_sample_complexity_search(&refs, &inst, cfg.epsilon, &cfg.convex_grid, cfg.trials, seed, workers)?;
    let convex: Vec<ConvexOutcome> = convex_algs
        .iter()
        .zip(searches)
        .map(|(a, search)| ConvexOutcome {
            alg: a.describe(),
            search,
        })
        .collect();

    let mut nonconvex = Vec::new();
    let rl = run_replearn(cfg.replearn_t, cfg.kappa, &inst)?;
    nonconvex.push(gd2_pipeline("replearn", rl.first, cfg.replearn_t, None, cfg, &inst, seed, workers)?);
    if cfg.reptile_t >= 2 {
        let tau = reptile_tau_schedule(cfg.reptile_t, cfg.reptile_delta)?;
        let spec = ReptileSpec::new(tau, cfg.kappa, cfg.reptile_t)?;
        let a_t = reptile_final_a(&spec, inst.r(), SeedSpec::new(cfg.seed, hash_mix(stream::SEPARATION, 1)));
        let first = SpikedIdentity::new(&inst.direction(), a_t, cfg.kappa)?;
        nonconvex.push(gd2_pipeline(
            "reptile",
            first,
            cfg.reptile_t as f64,
            Some(tau),
            cfg,
            &inst,
            seed,
            workers,
        )?);
    }

    let min_over = |it: &mut dyn Iterator<Item = Option<usize>>| it.flatten().min();
    Ok(SeparationReport {
        convex_n_eps: min_over(&mut convex.iter().map(|c| c.search.n_eps)),
        convex_lower_bound_n: convex_min_samples(d, inst.r(), inst.sigma(), cfg.epsilon)?,
        convex_lower_bound: cfg
            .convex_grid
            .iter()
            .map(|&n| (n, convex_lower_bound_exact(d, n, inst.r(), inst.sigma())))
            .collect(),
        convex,
        nonconvex_n_eps: min_over(&mut nonconvex.iter().map(|c| c.search.n_eps)),
        nonconvex,
    })
}

pub(super) fn separation_cmd(opts: &RunOptions, workers: &Workers) -> Result<RunReport> {
    let cfg: SeparationConfig = resolve(Command::Separation, opts)?;
    let report = run_separation(&cfg, workers)?;
    let mut out = OutputDir::create(&opts.out, echo(Command::Separation, &cfg))?;
    let replearn = &report.nonconvex[0];
    let body = json!({
        "convex": {
            "n_eps": report.convex_n_eps,
            "lower_bound": report.convex_lower_bound.last().map(|p| p.1),
            "lower_bound_min_n": report.convex_lower_bound_n,
            "lower_bound_by_n": report.convex_lower_bound.iter().map(|(n, b)| json!({"n": n, "bound": b})).collect::<Vec<_>>(),
            "configs": report.convex,
        },
        "nonconvex": {
            "n_eps": replearn.search.n_eps,
            "alpha": replearn.alpha,
            "T": replearn.t_tasks,
            "lambda": replearn.lambda,
            "best_n_eps": report.nonconvex_n_eps,
            "pipelines": report.nonconvex,
        },
        "epsilon": cfg.epsilon,
        "paired": true,
    });
    out.write_json("separation.json", body)?;
    let fmt = |n: Option<usize>| n.map_or("none".to_string(), |n| n.to_string());
    let lines = vec![
        format!(
            "separation: convex n_eps={} (bound requires n >= {})",
            fmt(report.convex_n_eps),
            report.convex_lower_bound_n
        ),
        format!(
            "separation: nonconvex n_eps={} (alpha={}, lambda={})",
            fmt(replearn.search.n_eps),
            replearn.alpha,
            replearn.lambda
        ),
    ];
    Ok(RunReport {
        command: Command::Separation,
        outputs: out.finish()?,
        passed: true,
        lines,
    })
}

// ---------------------------------------------------------------- risk / nsearch

/// Initialization of a convex method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    /// `"zero"` or `"w_star"`.
    Named(String),
    Explicit(Vec<f64>),
}

/// A single algorithm query, shared by `risk` and `nsearch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "QueryConfig::default_d")]
    pub d: usize,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "e1")]
    pub w_star: WStarSpec,
    /// `gd_step`, `gd_reg` or `gd2_reg`.
    #[serde(default = "QueryConfig::default_alg")]
    pub alg: String,
    #[serde(default = "QueryConfig::default_eta")]
    pub eta: f64,
    #[serde(default = "QueryConfig::default_t0")]
    pub t0: u64,
    /// Ridge weight; for `gd2_reg` with a learned first layer it defaults to
    /// `α^lambda_exponent`, for the other families to 0.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "QueryConfig::default_w0")]
    pub w0: InitSpec,
    /// `identity`, `spiked`, `replearn` or `reptile`.
    #[serde(default = "QueryConfig::default_first_layer")]
    pub first_layer: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "QueryConfig::default_replearn_t")]
    pub replearn_t: f64,
    #[serde(default = "QueryConfig::default_reptile_t")]
    pub reptile_t: u64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "QueryConfig::default_delta")]
    pub delta: f64,
    #[serde(default = "QueryConfig::default_lambda_exponent")]
    pub lambda_exponent: f64,
    /// Sample size for `risk`.
    #[serde(default = "QueryConfig::default_n")]
    pub n: usize,
    /// Accuracy target for `nsearch`.
    #[serde(default = "QueryConfig::default_epsilon")]
    pub epsilon: f64,
    /// Sample-size grid for `nsearch`.
    #[serde(default = "QueryConfig::default_grid")]
    pub grid: Vec<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
}

impl QueryConfig {
    fn default_d() -> usize {
        20
    }
    fn default_alg() -> String {
        "gd_reg".into()
    }
    fn default_eta() -> f64 {
        0.1
    }
    fn default_t0() -> u64 {
        100
    }
    fn default_w0() -> InitSpec {
        InitSpec::Named("zero".into())
    }
    fn default_first_layer() -> String {
        "identity".into()
    }
    fn default_replearn_t() -> f64 {
        1e16
    }
    fn default_reptile_t() -> u64 {
        100_000
    }
    fn default_delta() -> f64 {
        0.1
    }
    fn default_lambda_exponent() -> f64 {
        1.5
    }
    fn default_n() -> usize {
        20
    }
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_grid() -> Vec<usize> {
        vec![10, 20, 40, 80, 160, 320]
    }

    pub fn instance(&self) -> Result<MetaInstance> {
        InstanceConfig {
            d: self.d,
            r: self.r,
            sigma: self.sigma,
            w_star: self.w_star.clone(),
        }
        .build()
    }

    fn init(&self, inst: &MetaInstance) -> Result<Vector> {
        match &self.w0 {
            InitSpec::Named(s) if s == "zero" => Ok(Vector::zeros(inst.d())),
            InitSpec::Named(s) if s == "w_star" => Ok(inst.w_star().clone()),
            InitSpec::Named(s) => Err(Error::Config(format!(
                "unknown w0 \"{s}\" (expected \"zero\", \"w_star\" or a list)"
            ))),
            InitSpec::Explicit(v) => {
                if v.len() != inst.d() {
                    return Err(Error::Config(format!("w0 has {} entries but d = {}", v.len(), inst.d())));
                }
                Vector::try_new(v.clone())
            }
        }
    }

    fn first(&self, inst: &MetaInstance) -> Result<FirstLayer> {
        let u = inst.direction();
        let spiked = |alpha: f64| -> Result<FirstLayer> { Ok(FirstLayer::Spiked(SpikedIdentity::new(&u, alpha, self.kappa)?)) };
        match self.first_layer.as_str() {
            "identity" => Ok(FirstLayer::Dense(SymMatrix::identity(inst.d()))),
            "spiked" => spiked(
                self.alpha
                    .ok_or_else(|| Error::Config("first_layer \"spiked\" needs alpha".into()))?,
            ),
            "replearn" => Ok(FirstLayer::Spiked(run_replearn(self.replearn_t, self.kappa, inst)?.first)),
            "reptile" => {
                let tau = match self.tau {
                    Some(t) => t,
                    None => reptile_tau_schedule(self.reptile_t, self.delta)?,
                };
                let spec = ReptileSpec::new(tau, self.kappa, self.reptile_t)?;
                let run = run_reptile(&spec, inst, SeedSpec::new(self.seed, hash_mix(stream::RISK, 1)))?;
                Ok(FirstLayer::Spiked(run.first))
            }
            other => Err(Error::Config(format!(
                "unknown first_layer \"{other}\" (expected identity, spiked, replearn or reptile)"
            ))),
        }
    }

    /// The algorithm this config describes.
    pub fn alg_spec(&self, inst: &MetaInstance) -> Result<AlgSpec> {
        match self.alg.as_str() {
            "gd_step" => Ok(AlgSpec::GdStep {
                spec: GdStepSpec::new(self.eta, self.t0)?,
                w0: self.init(inst)?,
            }),
            "gd_reg" => Ok(AlgSpec::GdReg {
                spec: GdRegSpec::new(self.lambda.unwrap_or(0.0))?,
                w0: self.init(inst)?,
            }),
            "gd2_reg" => {
                let first = self.first(inst)?;
                let lambda = match (self.lambda, &first) {
                    (Some(l), _) => l,
                    (None, FirstLayer::Spiked(s)) => s.spike().powf(self.lambda_exponent),
                    (None, FirstLayer::Dense(_)) => {
                        return Err(Error::Config("gd2_reg with an identity first layer needs lambda".into()))
                    }
                };
                Ok(AlgSpec::Gd2Reg { lambda, first })
            }
            other => Err(Error::Config(format!(
                "unknown alg \"{other}\" (expected gd_step, gd_reg or gd2_reg)"
            ))),
        }
    }
}

impl Default for QueryConfig {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("defaults")
    }
}

fn query_seed(cfg: &QueryConfig, id: u64) -> SeedSpec {
    SeedSpec::new(cfg.seed, hash_mix(id, 0))
}

pub fn run_risk(cfg: &QueryConfig, workers: &Workers) -> Result<RiskRecord> {
    let inst = cfg.instance()?;
    let alg = cfg.alg_spec(&inst)?;
    let trials = cfg.trials.unwrap_or(crate::risk::DEFAULT_RISK_TRIALS);
    let est = mc_excess_risk(&alg, &inst, cfg.n, trials, query_seed(cfg, stream::RISK), workers)?;
    Ok(RiskRecord::new(&alg, &inst, cfg.n, &est, SeedSpec::new(cfg.seed, 0)))
}

pub(super) fn risk_cmd(opts: &RunOptions, workers: &Workers) -> Result<RunReport> {
    let cfg: QueryConfig = resolve(Command::Risk, opts)?;
    let rec = run_risk(&cfg, workers)?;
    let mut out = OutputDir::create(&opts.out, echo(Command::Risk, &cfg))?;
    let mut body = serde_json::to_value(&rec)?;
    body["convex_lower_bound"] = convex_lower_bound_exact(rec.d, rec.n, rec.r, rec.sigma).into();
    out.write_json("risk.json", body)?;
    let lines = vec![format!(
        "risk: {} n={} mean={} stderr={} trials={}",
        cfg.alg, rec.n, rec.mean, rec.stderr, rec.trials
    )];
    Ok(RunReport {
        command: Command::Risk,
        outputs: out.finish()?,
        passed: true,
        lines,
    })
}

pub fn run_nsearch(cfg: &QueryConfig, workers: &Workers) -> Result<(AlgSpec, SearchOutcome)> {
    let inst = cfg.instance()?;
    let alg = cfg.alg_spec(&inst)?;
    let trials = cfg.trials.unwrap_or(crate::risk::DEFAULT_SEARCH_TRIALS);
    let out = sample_complexity_search(
        |_| Ok(alg.clone()),
        &inst,
        cfg.epsilon,
        &cfg.grid,
        trials,
        query_seed(cfg, stream::NSEARCH),
        workers,
    )?;
    Ok((alg, out))
}

pub(super) fn nsearch_cmd(opts: &RunOptions, workers: &Workers) -> Result<RunReport> {
    let cfg: QueryConfig = resolve(Command::Nsearch, opts)?;
    if cfg.grid.is_empty() {
        return Err(Error::Config("nsearch needs a non-empty grid".into()));
    }
    let (alg, search) = run_nsearch(&cfg, workers)?;
    let inst = cfg.instance()?;
    let mut out = OutputDir::create(&opts.out, echo(Command::Nsearch, &cfg))?;
    let body = json!({
        "alg": alg.describe(),
        "d": inst.d(),
        "r": inst.r(),
        "sigma": inst.sigma(),
        "epsilon": cfg.epsilon,
        "n_eps": search.n_eps,
        "points": search.points,
        "convex_lower_bound_min_n": convex_min_samples(inst.d(), inst.r(), inst.sigma(), cfg.epsilon)?,
        "seed": cfg.seed,
    });
    out.write_json("nsearch.json", body)?;
    let lines = vec![format!(
        "nsearch: {} epsilon={} n_eps={}",
        cfg.alg,
        cfg.epsilon,
        search.n_eps.map_or("none".into(), |n| n.to_string())
    )];
    Ok(RunReport {
        command: Command::Nsearch,
        outputs: out.finish()?,
        passed: true,
        lines,
    })
}
