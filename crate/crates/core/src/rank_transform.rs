//! Randomized rank transformation and rebinning of rank histograms.
//!
//! A rank `r` of an observation among `m` ensemble members is mapped to
//! `(r - 1 + U) / (m + 1)` with `U` uniform on `[0, 1)`. The transformed
//! ranks are uniform on `[0, 1)` whenever the ranks are uniform on
//! `{1, ..., m + 1}`, so they can be binned into any number of bins.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::histogram::{Binner, Histogram};
use crate::rng::StreamFamily;

const TRANSFORM_TAG: &str = "transform";

/// Observation ranks for an ensemble with `ensemble_size` members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSeries {
    ensemble_size: u64,
    ranks: Vec<u64>,
}

impl RankSeries {
    pub fn new(ensemble_size: u64, ranks: Vec<i64>) -> Result<Self> {
        if ensemble_size == 0 {
            return Err(invalid("ensemble size must be positive"));
        }
        if ranks.is_empty() {
            return Err(Error::NoSamples);
        }
        let max = ensemble_size + 1;
        let ranks = ranks
            .into_iter()
            .enumerate()
            .map(|(index, value)| {
                if value >= 1 && value as u64 <= max {
                    Ok(value as u64)
                } else {
                    Err(Error::RankOutOfRange { index, value, max })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RankSeries { ensemble_size, ranks })
    }

    pub fn ensemble_size(&self) -> u64 {
        self.ensemble_size
    }

    pub fn ranks(&self) -> &[u64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Reads ranks from a CSV file with a `rank` header column, or from a
    /// JSON array when the content starts with `[`.
    pub fn from_path(path: impl AsRef<Path>, ensemble_size: u64) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Self::parse(&text, ensemble_size)
    }

    pub fn parse(text: &str, ensemble_size: u64) -> Result<Self> {
        let ranks: Vec<i64> = if text.trim_start().starts_with('[') {
            serde_json::from_str(text)?
        } else {
            #[derive(Deserialize)]
            struct Row {
                rank: i64,
            }
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
            reader
                .deserialize::<Row>()
                .map(|row| row.map(|r| r.rank))
                .collect::<std::result::Result<_, _>>()?
        };
        Self::new(ensemble_size, ranks)
    }
}

/// Transformed ranks in `[0, 1)` together with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedSample {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// `(rank - 1 + u) / (ensemble_size + 1)` for a single rank.
#[inline]
pub fn transform_rank(rank: u64, ensemble_size: u64, u: f64) -> f64 {
    ((rank - 1) as f64 + u) / (ensemble_size + 1) as f64
}

/// Transforms every rank with its own uniform draw. The draw for observation
/// `i` comes from substream `i` of `(seed, "transform")`.
pub fn transform_ranks(series: &RankSeries, seed: u64) -> TransformedSample {
    let family = StreamFamily::new(seed, TRANSFORM_TAG);
    let m = series.ensemble_size;
    let values = series
        .ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let u: f64 = family.stream(i as u64).gen();
            // `u < 1` keeps the result below one, except for rounding at the
            // very top of the range.
            let v = transform_rank(r, m, u);
            if v < 1.0 {
                v
            } else {
                1.0 - f64::EPSILON / 2.0
            }
        })
        .collect();
    TransformedSample { values, seed }
}

/// Bins values from `[0, 1)` into `k` half-open bins.
pub fn bin_samples(values: &[f64], k: usize) -> Result<Histogram> {
    if k < 2 {
        return Err(invalid(format!("bin count must be at least 2, got {k}")));
    }
    if values.is_empty() {
        return Err(Error::NoSamples);
    }
    let binner = Binner::new(k);
    let mut counts = vec![0u64; k];
    for (index, &value) in values.iter().enumerate() {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::ValueOutOfRange { index, value });
        }
        counts[binner.index(value)] += 1;
    }
    Histogram::from_counts(counts)
}

/// Rank histogram with `k` bins; `k` need not divide `m + 1` and may exceed it.
pub fn rank_histogram(series: &RankSeries, k: usize, seed: u64) -> Result<Histogram> {
    if k < 2 {
        return Err(invalid(format!("bin count must be at least 2, got {k}")));
    }
    bin_samples(&transform_ranks(series, seed).values, k)
}
