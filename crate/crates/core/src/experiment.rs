//! Seeding, result rows and small statistics helpers shared by the
//! Monte Carlo drivers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

/// How per-trial streams are derived from a master seed.
pub const SEED_DERIVATION: &str = "trial i of a sub-experiment with salt k uses \
ChaCha8Rng::seed_from_u64(seed ^ (k * 0x9E3779B97F4A7C15 mod 2^64)) with set_stream(i); salt 0 is the master seed itself";

/// The random stream for trial `stream` under master seed `seed`.
///
/// ChaCha streams are independent for distinct stream ids, so results do
/// not depend on how trials are scheduled across threads.
pub fn trial_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Master seed of a sub-experiment tagged `salt`.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// A stream for trial `stream` of a sub-experiment tagged `salt`.
pub fn salted_rng(seed: u64, salt: u64, stream: u64) -> SimRng {
    trial_rng(derive_seed(seed, salt), stream)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub n: usize,
    pub t: Option<usize>,
    pub param_json: String,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: Option<u64>,
    pub wall_ms: Option<u64>,
}

impl ExperimentRecord {
    pub fn new(experiment_id: &str, n: usize, statistic: &str, value: f64) -> Self {
        ExperimentRecord {
            experiment_id: experiment_id.to_string(),
            n,
            t: None,
            param_json: "{}".to_string(),
            statistic: statistic.to_string(),
            value,
            stderr: None,
            seed: None,
            wall_ms: None,
        }
    }

    pub fn at(mut self, t: usize) -> Self {
        self.t = Some(t);
        self
    }

    pub fn params(mut self, params: serde_json::Value) -> Self {
        self.param_json = params.to_string();
        self
    }

    pub fn stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub hits: usize,
    pub trials: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    /// Wilson interval at `z` standard deviations.
    pub fn wilson(hits: usize, trials: usize, z: f64) -> Self {
        assert!(trials > 0);
        let nf = trials as f64;
        let p = hits as f64 / nf;
        let z2 = z * z;
        let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
        let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf);
        Proportion {
            hits,
            trials,
            estimate: p,
            // The interval touches 0 (or 1) exactly when every trial missed (hit).
            lower: if hits == 0 { 0.0 } else { (centre - half).max(0.0) },
            upper: if hits == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    /// Binomial standard error of the point estimate.
    pub fn stderr(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
