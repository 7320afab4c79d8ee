//! Deterministic Monte Carlo machinery.
//!
//! Reproducibility contract: every estimate is a pure function of
//! `(estimator, base_seed, replicates)`. Replicate seeds are derived by
//! counter-based mixing rather than a shared sequential stream, so the
//! result is independent of the parallelism degree and of scheduling.
//! Aggregation walks the per-replicate values in replicate-index order.

use rayon::prelude::*;
use thiserror::Error;

/// splitmix64 increment (golden-ratio constant).
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output finalizer (Steele, Lea & Flood's SplitMix,
/// as popularized by Vigna's `splitmix64.c`).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one replicate: the `(index + 1)`-th output of the splitmix64
/// stream seeded at `base_seed`. Pure integer mixing, identical on every
/// platform.
#[inline]
pub fn derive_seed(base_seed: u64, replicate_index: u64) -> u64 {
    mix(base_seed.wrapping_add(GAMMA.wrapping_mul(replicate_index.wrapping_add(1))))
}

/// Small deterministic RNG: a splitmix64 stream plus a fixed
/// uniform-to-Gaussian transform.
///
/// Gaussians come from the Box–Muller transform applied to 53-bit
/// uniforms, so the same seed yields the same sample everywhere; the
/// second variate of each pair is cached and returned on the next call.
#[derive(Debug, Clone)]
pub struct McRng {
    state: u64,
    spare_normal: Option<f64>,
}

impl McRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare_normal: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box–Muller: `r = sqrt(-2 ln u1)`, angle
    /// `2 pi u2`, with `u1` shifted into `(0, 1]` so the log is finite.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Replication plan for one Monte Carlo run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub base_seed: u64,
    pub replicates: u64,
    pub max_parallelism: usize,
    /// Stop early once the running standard error drops to this level.
    /// Checked at fixed batch boundaries so the stopping point does not
    /// depend on the parallelism degree.
    pub target_stderr: Option<f64>,
}

/// Batch granularity for early stopping. Fixed (not a function of
/// `max_parallelism`) so runs at different parallelism stop identically.
const STOP_BATCH: u64 = 64;

impl RunPlan {
    pub fn new(base_seed: u64, replicates: u64) -> Self {
        Self { base_seed, replicates, max_parallelism: 1, target_stderr: None }
    }

    pub fn with_parallelism(mut self, threads: usize) -> Self {
        self.max_parallelism = threads.max(1);
        self
    }

    pub fn with_target_stderr(mut self, target: f64) -> Self {
        self.target_stderr = Some(target);
        self
    }

    fn validate(&self) -> Result<(), McError> {
        if self.replicates == 0 {
            return Err(McError::EmptyPlan);
        }
        Ok(())
    }
}

/// A Monte Carlo estimate together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over replicates divided by sqrt(count);
    /// zero when only one replicate ran.
    pub stderr: f64,
    /// Replicates actually used (may be below the plan under early stop).
    pub replicates: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Aggregate raw per-replicate values in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 0, "cannot summarize an empty sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            (ss / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, replicates: n as u64, seed }
    }
}

#[derive(Debug, Error)]
pub enum McError {
    #[error("replication plan must request at least one replicate")]
    EmptyPlan,
    #[error("estimator failed on replicate {index} (seed {seed}): {message}")]
    Replicate { index: u64, seed: u64, message: String },
    #[error("estimator returned a non-finite value on replicate {index} (seed {seed})")]
    NonFinite { index: u64, seed: u64 },
}

/// Run a fallible estimator over the plan's replicates.
///
/// The estimator must be a pure function of its replicate seed. Failures
/// abort the run and report the replicate index and seed; when several
/// replicates fail, the lowest index is reported regardless of schedule.
pub fn try_run_mc<F, E>(plan: &RunPlan, estimator: F) -> Result<McEstimate, McError>
where
    F: Fn(u64) -> Result<f64, E> + Sync,
    E: std::fmt::Display + Send,
{
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.max_parallelism.max(1))
        .build()
        .expect("thread pool construction");

    let mut values: Vec<f64> = Vec::with_capacity(plan.replicates as usize);
    let mut next = 0u64;
    while next < plan.replicates {
        let hi = (next + STOP_BATCH).min(plan.replicates);
        let batch: Vec<(u64, Result<f64, E>)> = pool.install(|| {
            (next..hi)
                .into_par_iter()
                .map(|i| (i, estimator(derive_seed(plan.base_seed, i))))
                .collect()
        });
        for (i, res) in batch {
            let seed = derive_seed(plan.base_seed, i);
            match res {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => return Err(McError::NonFinite { index: i, seed }),
                Err(e) => {
                    return Err(McError::Replicate { index: i, seed, message: e.to_string() })
                }
            }
        }
        next = hi;
        if let Some(target) = plan.target_stderr {
            if values.len() >= 2 {
                let est = McEstimate::from_samples(&values, plan.base_seed);
                if est.stderr <= target {
                    break;
                }
            }
        }
    }
    Ok(McEstimate::from_samples(&values, plan.base_seed))
}

/// [`try_run_mc`] for estimators that cannot fail.
pub fn run_mc<F>(plan: &RunPlan, estimator: F) -> Result<McEstimate, McError>
where
    F: Fn(u64) -> f64 + Sync,
{
    try_run_mc(plan, |seed| Ok::<f64, std::convert::Infallible>(estimator(seed)))
}
