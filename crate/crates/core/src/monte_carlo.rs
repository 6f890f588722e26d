//! Monte-Carlo estimation of critical values and false-rejection
//! probabilities for the flatness tests.
//!
//! Replicate `i` draws its `n` uniforms from substream `i` of
//! `(master_seed, "null")`. Results are collected in replicate order, so they
//! do not depend on the number of worker threads.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{distance_from_counts, DistanceKind};
use crate::error::{invalid, Result};
use crate::histogram::Binner;
use crate::rng::{with_workers, StreamFamily};

pub const DEFAULT_REPLICATIONS: usize = 1_000_000;
const NULL_TAG: &str = "null";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub master_seed: u64,
    /// Number of worker threads; `None` uses the global rayon pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { replications: DEFAULT_REPLICATIONS, master_seed: 0, workers: None }
    }
}

impl McConfig {
    pub fn new(replications: usize, master_seed: u64) -> Self {
        McConfig { replications, master_seed, workers: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("worker count must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn validate_design(k: usize, n: usize) -> Result<()> {
    if k < 2 {
        return Err(invalid(format!("bin count must be at least 2, got {k}")));
    }
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    Ok(())
}

pub(crate) fn validate_threshold(c: f64) -> Result<()> {
    if c.is_nan() || c < 0.0 {
        return Err(invalid(format!("threshold must be non-negative, got {c}")));
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Bins `n` draws of `sample` into `counts`.
#[inline]
pub(crate) fn fill_counts<R: Rng, F: FnMut(&mut R) -> f64>(
    rng: &mut R,
    n: usize,
    binner: &Binner,
    counts: &mut [u64],
    mut sample: F,
) {
    counts.iter_mut().for_each(|c| *c = 0);
    for _ in 0..n {
        counts[binner.index(sample(rng))] += 1;
    }
}

/// Distances of `replications` histograms of `n` uniform points in `k` bins,
/// in replicate order.
pub fn simulate_null_distances(kind: DistanceKind, k: usize, n: usize, cfg: &McConfig) -> Result<Vec<f64>> {
    validate_design(k, n)?;
    cfg.validate()?;
    let family = StreamFamily::new(cfg.master_seed, NULL_TAG);
    let binner = Binner::new(k);
    with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || vec![0u64; k],
                |counts, i| {
                    let mut rng = family.stream(i as u64);
                    fill_counts(&mut rng, n, &binner, counts, |r| r.gen::<f64>());
                    distance_from_counts(counts, n as u64, kind)
                },
            )
            .collect()
    })
}

/// Sorted sample of simulated null distances for one `(kind, k, n)` design.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    pub kind: DistanceKind,
    pub k: usize,
    pub n: usize,
    sorted: Vec<f64>,
}

impl NullDistribution {
    pub fn simulate(kind: DistanceKind, k: usize, n: usize, cfg: &McConfig) -> Result<Self> {
        let mut sorted = simulate_null_distances(kind, k, n, cfg)?;
        sorted.par_sort_unstable_by(f64::total_cmp);
        Ok(NullDistribution { kind, k, n, sorted })
    }

    pub fn from_samples(kind: DistanceKind, k: usize, n: usize, mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("empty sample"));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(NullDistribution { kind, k, n, sorted: samples })
    }

    pub fn replications(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Smallest sampled value `v` with `#{D > v} / N <= alpha`: the order
    /// statistic `D_(m)` with `m = N - floor(alpha N)`, clamped to `m >= 1`.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        validate_alpha(alpha)?;
        let n = self.sorted.len();
        // Absorbs representation error such as 0.29 * 100 = 28.999999999999996.
        let allowed = (alpha * n as f64 + 1e-9).floor() as usize;
        let m = n.saturating_sub(allowed).max(1);
        Ok(self.sorted[m - 1])
    }

    /// Fraction of sampled distances strictly greater than `c`.
    pub fn exceedance(&self, c: f64) -> Result<f64> {
        validate_threshold(c)?;
        let at_most = self.sorted.partition_point(|&d| d <= c);
        Ok((self.sorted.len() - at_most) as f64 / self.sorted.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueResult {
    pub kind: DistanceKind,
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub c: f64,
    pub replications: usize,
}

pub fn critical_value(kind: DistanceKind, alpha: f64, k: usize, n: usize, cfg: &McConfig) -> Result<CriticalValueResult> {
    validate_alpha(alpha)?;
    let null = NullDistribution::simulate(kind, k, n, cfg)?;
    Ok(CriticalValueResult {
        kind,
        alpha,
        k,
        n,
        c: null.critical_value(alpha)?,
        replications: cfg.replications,
    })
}

/// Probability that a histogram of uniform data exceeds `c`.
pub fn false_reject_probability(kind: DistanceKind, c: f64, k: usize, n: usize, cfg: &McConfig) -> Result<f64> {
    validate_threshold(c)?;
    let d = simulate_null_distances(kind, k, n, cfg)?;
    Ok(d.iter().filter(|&&x| x > c).count() as f64 / d.len() as f64)
}

/// Binomial standard error of a Monte-Carlo probability estimate.
pub fn standard_error(p: f64, replications: usize) -> f64 {
    (p * (1.0 - p) / replications as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub kind: DistanceKind,
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub c: f64,
}

/// On-disk table of computed critical values. Entries are advisory and can
/// always be recomputed.
#[derive(Debug, Clone, Default)]
pub struct ThresholdCache {
    path: Option<PathBuf>,
    entries: Vec<CacheEntry>,
}

impl ThresholdCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the cache at `path`; a missing file yields an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = match std::fs::read_to_string(&path) {
            Ok(text) if text.trim().is_empty() => Vec::new(),
            Ok(text) => serde_json::from_str(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(ThresholdCache { path: Some(path), entries })
    }

    pub fn entries(&self) -> &[CacheEntry] {
        &self.entries
    }

    pub fn get(&self, kind: DistanceKind, alpha: f64, k: usize, n: usize, cfg: &McConfig) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| {
                e.kind == kind
                    && e.alpha.to_bits() == alpha.to_bits()
                    && e.k == k
                    && e.n == n
                    && e.replications == cfg.replications
                    && e.master_seed == cfg.master_seed
            })
            .map(|e| e.c)
    }

    /// Looks up the critical value, computing and storing it on a miss.
    pub fn critical_value(&mut self, kind: DistanceKind, alpha: f64, k: usize, n: usize, cfg: &McConfig) -> Result<CriticalValueResult> {
        if let Some(c) = self.get(kind, alpha, k, n, cfg) {
            return Ok(CriticalValueResult { kind, alpha, k, n, c, replications: cfg.replications });
        }
        let result = critical_value(kind, alpha, k, n, cfg)?;
        self.entries.push(CacheEntry {
            kind,
            alpha,
            k,
            n,
            replications: cfg.replications,
            master_seed: cfg.master_seed,
            c: result.c,
        });
        Ok(result)
    }

    pub fn save(&self) -> Result<()> {
        if let Some(path) = &self.path {
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, serde_json::to_vec_pretty(&self.entries)?)?;
            std::fs::rename(tmp, path)?;
        }
        Ok(())
    }
}
