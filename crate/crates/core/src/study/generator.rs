use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::histogram::Histogram;
use crate::rng::substream;

pub const DEFAULT_STEPS: usize = 50;

/// Parameters for a random histogram with a prescribed L1 distance from the
/// flat histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub k: usize,
    pub target_d: f64,
    pub steps: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(k: usize, target_d: f64, seed: u64) -> Self {
        GeneratorSpec { k, target_d, steps: DEFAULT_STEPS, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(invalid(format!("bin count must be at least 2, got {}", self.k)));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        let bound = 2.0 * (self.k as f64 - 1.0) / self.k as f64;
        if !(self.target_d >= 0.0 && self.target_d < bound) {
            return Err(invalid(format!(
                "target L1 distance {} must lie in [0, {bound}) for {} bins",
                self.target_d, self.k
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Untouched,
    Raised,
    Lowered,
}

/// Random histogram with `k` bins and L1 distance `target_d`.
///
/// Starting from the flat histogram, each of `steps` rounds raises one bin
/// that has never been lowered and lowers one bin that has never been raised,
/// both by `target_d * k / (2 steps)`. Every move adds `target_d / (2 steps)`
/// to the L1 distance and the total area is unchanged. A bin can only be
/// lowered while its height stays non-negative; when no bin qualifies the
/// attempt fails and the caller should retry with another seed.
pub fn generate_histogram(spec: &GeneratorSpec) -> Result<Histogram> {
    spec.validate()?;
    let k = spec.k;
    let step = spec.target_d * k as f64 / (2.0 * spec.steps as f64);
    let mut rng = substream(spec.seed, "generator", 0);
    let mut marks = vec![Mark::Untouched; k];
    let mut raised = vec![0u64; k];
    let mut lowered = vec![0u64; k];
    let mut candidates = Vec::with_capacity(k);

    for round in 0..spec.steps {
        candidates.clear();
        candidates.extend((0..k).filter(|&j| marks[j] != Mark::Lowered));
        let up = candidates[rng.gen_range(0..candidates.len())];
        raised[up] += 1;
        marks[up] = Mark::Raised;

        candidates.clear();
        candidates.extend(
            (0..k).filter(|&j| marks[j] != Mark::Raised && (lowered[j] + 1) as f64 * step <= 1.0 + 1e-12),
        );
        if candidates.is_empty() {
            return Err(Error::Generation(format!(
                "no bin can be lowered in round {} of {} (k = {k}, D = {})",
                round + 1,
                spec.steps,
                spec.target_d
            )));
        }
        let down = candidates[rng.gen_range(0..candidates.len())];
        lowered[down] += 1;
        marks[down] = Mark::Lowered;
    }

    let heights = (0..k)
        .map(|j| {
            let h = 1.0 + raised[j] as f64 * step - lowered[j] as f64 * step;
            h.max(0.0)
        })
        .collect();
    Histogram::from_heights(heights)
}

/// Retries [`generate_histogram`] with seeds derived from `spec.seed` until an
/// attempt succeeds or `max_attempts` is reached.
pub fn generate_histogram_with_retries(spec: &GeneratorSpec, max_attempts: usize) -> Result<Histogram> {
    let mut last = None;
    for attempt in 0..max_attempts.max(1) {
        let seed = if attempt == 0 {
            spec.seed
        } else {
            substream(spec.seed, "generator-retry", attempt as u64).gen()
        };
        match generate_histogram(&GeneratorSpec { seed, ..*spec }) {
            Ok(h) => return Ok(h),
            Err(e @ Error::Generation(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
