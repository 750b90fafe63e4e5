//! Seeded, stream-splittable randomness.
//!
//! A [`SeedSpec`] is a `(master_seed, stream_id)` pair. The generator behind it is
//! ChaCha8 keyed by `master_seed` with `stream_id` as the ChaCha stream, so distinct
//! streams never overlap and every draw is an integer-only state transition.
//!
//! Normal variates come from the Box–Muller transform applied to 53-bit uniforms:
//!
//! ```text
//! u1 = (k1 + 1) / 2^53        k1 = next_u64 >> 11   (so u1 ∈ (0, 1])
//! u2 =  k2      / 2^53        k2 = next_u64 >> 11
//! z0 = sqrt(-2 ln u1) cos(2π u2)
//! z1 = sqrt(-2 ln u1) sin(2π u2)
//! ```
//!
//! `z0` is returned first and `z1` is cached for the next call.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one stream id: `mix64(mix64(a) ^ b)`.
pub fn hash_mix(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b)
}

/// Fully determines a random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    /// Seed for trial `trial` of experiment `experiment_id`.
    pub fn for_trial(master_seed: u64, experiment_id: u64, trial: u64) -> Self {
        SeedSpec::new(master_seed, hash_mix(experiment_id, trial))
    }

    /// Independent sub-stream `k` of this stream.
    pub fn child(&self, k: u64) -> Self {
        SeedSpec::new(self.master_seed, hash_mix(self.stream_id, k))
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::new(*self)
    }
}

/// A task sign `s ∈ {+1, −1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        if x == 1.0 {
            Ok(Sign::Plus)
        } else if x == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(Error::invalid(format!("sign must be +1 or -1, got {x}")))
        }
    }
}

/// Generator state for one stream. Never shared between threads.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamRng {
    pub fn new(seed: SeedSpec) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed.master_seed);
        inner.set_stream(seed.stream_id);
        StreamRng { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn std_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_M53;
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.std_normal()
    }

    pub fn sign(&mut self) -> Sign {
        if self.next_u64() >> 63 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn normal_vector(&mut self, d: usize) -> Vector {
        Vector::from_fn(d, |_| self.std_normal())
    }
}

/// `d` i.i.d. draws from `N(mean, std²)`.
pub fn gaussian_vector(seed: SeedSpec, d: usize, mean: f64, std: f64) -> Result<Vector> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(std >= 0.0) || !std.is_finite() || !mean.is_finite() {
        return Err(Error::invalid(format!(
            "need finite mean and std >= 0, got mean={mean} std={std}"
        )));
    }
    let mut rng = seed.rng();
    Ok(Vector::from_fn(d, |_| rng.normal(mean, std)))
}

/// `t` i.i.d. uniform signs.
pub fn rademacher_signs(seed: SeedSpec, t: usize) -> Vec<Sign> {
    let mut rng = seed.rng();
    (0..t).map(|_| rng.sign()).collect()
}
