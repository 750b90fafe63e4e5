//! The two-task regression instance, dataset sampling, and loss evaluation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, sym_eigen, EigenDecomposition, Matrix, SymMatrix, Vector};
use crate::rand::{SeedSpec, Sign};
use crate::twolayer::FirstLayer;

/// Uniform mixture of the regression tasks with targets `+w*` and `−w*`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaInstance {
    w_star: Vector,
    sigma: f64,
}

impl MetaInstance {
    pub fn new(w_star: Vector, sigma: f64) -> Result<Self> {
        let w_star = Vector::try_new(w_star.into_inner())?;
        if w_star.norm() == 0.0 {
            return Err(Error::invalid("w_star must be non-zero"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(MetaInstance { w_star, sigma })
    }

    /// `w* = r e₁` in dimension `d`.
    pub fn axis_aligned(d: usize, r: f64, sigma: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(r > 0.0) {
            return Err(Error::invalid(format!("r must be positive, got {r}")));
        }
        MetaInstance::new(Vector::basis(d, 0).scaled(r), sigma)
    }

    pub fn d(&self) -> usize {
        self.w_star.dim()
    }

    pub fn w_star(&self) -> &Vector {
        &self.w_star
    }

    /// Unit vector along `w*`.
    pub fn direction(&self) -> Vector {
        self.w_star.scaled(1.0 / self.r())
    }

    /// `‖w*‖`
    pub fn r(&self) -> f64 {
        self.w_star.norm()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The best achievable population loss, `σ²`.
    pub fn bayes_loss(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn task(&self, sign: Sign) -> Task<'_> {
        Task {
            instance: self,
            sign,
        }
    }
}

/// How `w*` is given in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WStarSpec {
    /// Only `"e1"` is accepted: `w* = r e₁`.
    Named(String),
    Explicit(Vec<f64>),
}

/// Instance fields as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub sigma: f64,
    #[serde(default = "default_w_star")]
    pub w_star: WStarSpec,
}

fn default_w_star() -> WStarSpec {
    WStarSpec::Named("e1".into())
}

impl InstanceConfig {
    pub fn build(&self) -> Result<MetaInstance> {
        match &self.w_star {
            WStarSpec::Named(name) if name == "e1" => {
                MetaInstance::axis_aligned(self.d, self.r.unwrap_or(1.0), self.sigma)
            }
            WStarSpec::Named(name) => Err(Error::Config(format!(
                "unknown w_star \"{name}\" (expected \"e1\" or a list)"
            ))),
            WStarSpec::Explicit(entries) => {
                if entries.len() != self.d {
                    return Err(Error::Config(format!(
                        "w_star has {} entries but d = {}",
                        entries.len(),
                        self.d
                    )));
                }
                let inst = MetaInstance::new(Vector::try_new(entries.clone())?, self.sigma)?;
                if let Some(r) = self.r {
                    if (inst.r() - r).abs() > 1e-9 * (1.0 + r) {
                        return Err(Error::Config(format!(
                            "‖w_star‖ = {} does not match r = {r}",
                            inst.r()
                        )));
                    }
                }
                Ok(inst)
            }
        }
    }
}

/// One of the two tasks, `ρ_{s w*}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task<'a> {
    pub instance: &'a MetaInstance,
    pub sign: Sign,
}

impl Task<'_> {
    /// `s · w*`
    pub fn target(&self) -> Vector {
        self.instance.w_star.scaled(self.sign.value())
    }
}

/// Draws the task sign uniformly.
pub fn sample_task(inst: &MetaInstance, seed: SeedSpec) -> Task<'_> {
    inst.task(seed.rng().sign())
}

/// Training set `(X, ξ, y)` with `y = X (s w*) + ξ`.
///
/// The empirical covariance and its eigendecomposition are computed on first use
/// and cached, so several algorithms can share one dataset cheaply.
#[derive(Debug)]
pub struct Dataset {
    x: Matrix,
    noise: Vector,
    labels: Vector,
    cov: OnceLock<SymMatrix>,
    eig: OnceLock<std::result::Result<EigenDecomposition, String>>,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Dataset::from_raw(self.x.clone(), self.noise.clone(), self.labels.clone())
    }
}

impl Dataset {
    fn from_raw(x: Matrix, noise: Vector, labels: Vector) -> Self {
        Dataset {
            x,
            noise,
            labels,
            cov: OnceLock::new(),
            eig: OnceLock::new(),
        }
    }

    /// Builds `y = X (s w*) + ξ` from given inputs and noise.
    pub fn from_parts(task: &Task<'_>, x: Matrix, noise: Vector) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::invalid("dataset needs at least one row"));
        }
        check_dim(task.instance.d(), x.cols())?;
        check_dim(x.rows(), noise.dim())?;
        let labels = x.matvec(&task.target()).add(&noise);
        Ok(Dataset::from_raw(x, noise, labels))
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn noise(&self) -> &Vector {
        &self.noise
    }

    pub fn labels(&self) -> &Vector {
        &self.labels
    }

    /// `Σ_X = (1/n) Xᵀ X`
    pub fn covariance(&self) -> &SymMatrix {
        self.cov.get_or_init(|| self.x.gram(self.n() as f64))
    }

    pub fn emp_covariance(&self) -> EmpCovariance {
        EmpCovariance {
            matrix: self.covariance().clone(),
            n: self.n(),
        }
    }

    /// Eigendecomposition of `Σ_X`.
    pub fn covariance_eigen(&self) -> Result<&EigenDecomposition> {
        match self.eig.get_or_init(|| sym_eigen(self.covariance()).map_err(|e| e.to_string())) {
            Ok(e) => Ok(e),
            Err(msg) => Err(Error::invalid(format!("covariance eigendecomposition failed: {msg}"))),
        }
    }

    /// `(1/n) Xᵀ y`
    pub fn xty(&self) -> Vector {
        self.x.tr_matvec(&self.labels).scaled(1.0 / self.n() as f64)
    }

    /// `(1/n) Xᵀ ξ`
    pub fn xt_noise(&self) -> Vector {
        self.x.tr_matvec(&self.noise).scaled(1.0 / self.n() as f64)
    }
}

/// `Σ_X` together with the sample count it was formed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpCovariance {
    pub matrix: SymMatrix,
    pub n: usize,
}

/// Samples `n` rows `x ~ N(0, I_d)` then `n` noise values `ξ ~ N(0, σ²)`.
pub fn sample_dataset(task: &Task<'_>, n: usize, seed: SeedSpec) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let d = task.instance.d();
    let sigma = task.instance.sigma();
    let mut rng = seed.rng();
    let x = Matrix::from_fn(n, d, |_, _| rng.std_normal());
    let noise = Vector::from_fn(n, |_| sigma * rng.std_normal());
    Dataset::from_parts(task, x, noise)
}

/// `‖w − s w*‖² + σ²`
pub fn pop_loss_linear(task: &Task<'_>, w: &[f64]) -> Result<f64> {
    check_dim(task.instance.d(), w.len())?;
    let err = Vector::from(w.to_vec()).sub(&task.target()).norm_sq();
    Ok(err + task.instance.bayes_loss())
}

/// `‖Aᵀ w − s w*‖² + σ²`
pub fn pop_loss_twolayer(task: &Task<'_>, a: &FirstLayer, w: &[f64]) -> Result<f64> {
    let d = task.instance.d();
    check_dim(d, a.dim())?;
    check_dim(d, w.len())?;
    pop_loss_linear(task, &a.tr_matvec(w))
}

/// `(1/n) Σ (wᵀ x_i − y_i)²`
pub fn emp_loss_linear(ds: &Dataset, w: &[f64]) -> Result<f64> {
    check_dim(ds.d(), w.len())?;
    let resid = ds.x.matvec(w).sub(&ds.labels);
    Ok(resid.norm_sq() / ds.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpikedIdentity;
    use crate::rand::StreamRng;
    use crate::twolayer::{gd_pop_fixed_point, ScalarPair};
    use proptest::prelude::*;

    fn inst(d: usize, r: f64, sigma: f64) -> MetaInstance {
        MetaInstance::axis_aligned(d, r, sigma).unwrap()
    }

    #[test]
    fn task_sign_balance_and_determinism() {
        let m = inst(3, 1.0, 0.5);
        let plus = (0..10_000)
            .filter(|&k| sample_task(&m, SeedSpec::new(42, k)).sign == Sign::Plus)
            .count();
        let frac = plus as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "frac={frac}");
        let s = SeedSpec::new(1, 2);
        assert_eq!(sample_task(&m, s).sign, sample_task(&m, s).sign);
        assert!(std::ptr::eq(sample_task(&m, s).instance, &m));
    }

    #[test]
    fn noiseless_labels_are_exact() {
        let m = inst(4, 2.0, 0.0);
        let t = m.task(Sign::Minus);
        let ds = sample_dataset(&t, 7, SeedSpec::new(3, 3)).unwrap();
        assert_eq!(ds.labels(), &ds.x().matvec(&t.target()));
    }

    #[test]
    fn hand_computed_label() {
        let m = MetaInstance::new(Vector::from(vec![2.0]), 1.0).unwrap();
        let t = m.task(Sign::Minus);
        let x = Matrix::from_row_major(1, 1, vec![0.5]).unwrap();
        let ds = Dataset::from_parts(&t, x, Vector::from(vec![0.1])).unwrap();
        assert!((ds.labels()[0] + 0.9).abs() < 1e-15);
    }

    #[test]
    fn covariance_near_identity() {
        let m = inst(3, 1.0, 1.0);
        let ds = sample_dataset(&m.task(Sign::Plus), 100_000, SeedSpec::new(5, 0)).unwrap();
        let c = ds.covariance();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - want).abs() < 0.02);
            }
        }
    }

    #[test]
    fn linear_loss_examples() {
        let m = inst(3, 1.0, 1.0);
        let t = m.task(Sign::Plus);
        assert_eq!(pop_loss_linear(&t, &t.target()).unwrap(), 1.0);
        assert_eq!(pop_loss_linear(&t, &[0.0; 3]).unwrap(), 2.0);
        let m0 = inst(3, 1.0, 0.0);
        let t0 = m0.task(Sign::Minus);
        assert_eq!(pop_loss_linear(&t0, &t0.target().scaled(-1.0)).unwrap(), 4.0);
        assert!(pop_loss_linear(&t, &[0.0; 2]).is_err());
    }

    #[test]
    fn twolayer_loss_examples() {
        let m = inst(3, 1.5, 0.7);
        let t = m.task(Sign::Minus);
        let w = Vector::from(vec![0.3, -0.2, 1.0]);
        let id = FirstLayer::Dense(SymMatrix::identity(3));
        assert_eq!(
            pop_loss_twolayer(&t, &id, &w).unwrap(),
            pop_loss_linear(&t, &w).unwrap()
        );
        // fixed point of the population flow reaches the noise floor
        let fp = gd_pop_fixed_point(ScalarPair::new(0.4, 0.1), m.r(), t.sign);
        let a = FirstLayer::Spiked(SpikedIdentity::new(&m.direction(), fp.a, 0.1).unwrap());
        let loss = pop_loss_twolayer(&t, &a, &m.direction().scaled(fp.b)).unwrap();
        assert!((loss - m.bayes_loss()).abs() < 1e-12, "loss={loss}");
    }

    #[test]
    fn emp_loss_examples() {
        let m = inst(2, 1.0, 0.0);
        let t = m.task(Sign::Plus);
        let x = Matrix::from_row_major(1, 2, vec![0.3, 0.9]).unwrap();
        let ds = Dataset::from_parts(&t, x, Vector::zeros(1)).unwrap();
        assert_eq!(emp_loss_linear(&ds, &t.target()).unwrap(), 0.0);

        let ds = sample_dataset(&inst(4, 1.0, 1.0).task(Sign::Minus), 9, SeedSpec::new(1, 1)).unwrap();
        let zero = emp_loss_linear(&ds, &[0.0; 4]).unwrap();
        assert!((zero - ds.labels().norm_sq() / 9.0).abs() < 1e-14);

        let w = [0.5, -1.0, 2.0, 0.1];
        let mut naive = 0.0;
        for i in 0..ds.n() {
            let mut p = 0.0;
            for j in 0..4 {
                p += w[j] * ds.x()[(i, j)];
            }
            naive += (p - ds.labels()[i]).powi(2);
        }
        naive /= ds.n() as f64;
        assert!((emp_loss_linear(&ds, &w).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn empirical_loss_tracks_population_loss() {
        let m = inst(3, 1.0, 0.5);
        let t = m.task(Sign::Plus);
        let w = [0.2, 0.4, -0.3];
        let pop = pop_loss_linear(&t, &w).unwrap();
        let reps: Vec<f64> = (0..100)
            .map(|k| {
                let ds = sample_dataset(&t, 10_000, SeedSpec::new(8, k)).unwrap();
                emp_loss_linear(&ds, &w).unwrap()
            })
            .collect();
        let mean = reps.iter().sum::<f64>() / 100.0;
        let sd = (reps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!((mean - pop).abs() <= 5.0 * sd / 10.0, "mean={mean} pop={pop}");
    }

    #[test]
    fn config_parsing() {
        let c: InstanceConfig = serde_json::from_str(r#"{"d":3,"r":2.0,"sigma":1.0,"w_star":"e1"}"#).unwrap();
        let m = c.build().unwrap();
        assert_eq!(&*m.w_star().clone(), &[2.0, 0.0, 0.0]);

        let c: InstanceConfig = serde_json::from_str(r#"{"d":2,"sigma":0.0,"w_star":[3.0,4.0]}"#).unwrap();
        assert_eq!(c.build().unwrap().r(), 5.0);

        let bad: InstanceConfig = serde_json::from_str(r#"{"d":2,"r":1.0,"sigma":0.0,"w_star":[3.0,4.0]}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Config(_))));
        let bad: InstanceConfig = serde_json::from_str(r#"{"d":2,"sigma":0.0,"w_star":"e2"}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn excess_loss_nonnegative(
            seed in any::<u64>(), d in 1usize..8, sigma in 0.0f64..3.0, plus in any::<bool>()
        ) {
            let m = inst(d, 1.3, sigma);
            let t = m.task(if plus { Sign::Plus } else { Sign::Minus });
            let mut rng = StreamRng::new(SeedSpec::new(seed, 0));
            let w = rng.normal_vector(d);
            let excess = pop_loss_linear(&t, &w).unwrap() - m.bayes_loss();
            prop_assert!(excess >= 0.0);
            prop_assert_eq!(pop_loss_linear(&t, &t.target()).unwrap(), m.bayes_loss());
        }
    }
}
