//! Non-uniform alternatives and rejection probabilities under them.
//!
//! * sloped: density `2/3 + 2x/3`, increasing from 2/3 to 4/3 (bias);
//! * U-shaped: density `3(x - 1/2)^2 + 3/4` (underdispersion).
//!
//! Both are sampled by inverting the CDF of one uniform per draw. Replicate
//! `i` of a power estimate uses substream `i` of `(seed, "power")` for every
//! alternative, so alternatives are compared on common random numbers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{distance_from_counts, DistanceKind};
use crate::error::{invalid, Error, Result};
use crate::histogram::Binner;
use crate::monte_carlo::{fill_counts, validate_design, validate_threshold, McConfig};
use crate::rng::{with_workers, StreamFamily};

pub const DEFAULT_POWER_REPLICATIONS: usize = 1000;
const POWER_TAG: &str = "power";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlternativeKind {
    Uniform,
    Sloped,
    #[serde(rename = "ushaped")]
    UShaped,
}

impl AlternativeKind {
    pub const ALL: [AlternativeKind; 3] = [AlternativeKind::Uniform, AlternativeKind::Sloped, AlternativeKind::UShaped];

    pub fn as_str(self) -> &'static str {
        match self {
            AlternativeKind::Uniform => "uniform",
            AlternativeKind::Sloped => "sloped",
            AlternativeKind::UShaped => "ushaped",
        }
    }

    pub fn inverse_cdf(self, u: f64) -> f64 {
        match self {
            AlternativeKind::Uniform => u,
            AlternativeKind::Sloped => sloped_inverse_cdf(u),
            AlternativeKind::UShaped => ushaped_inverse_cdf(u),
        }
    }
}

impl fmt::Display for AlternativeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlternativeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "uniform" => Ok(AlternativeKind::Uniform),
            "sloped" => Ok(AlternativeKind::Sloped),
            "ushaped" => Ok(AlternativeKind::UShaped),
            other => Err(invalid(format!("unknown alternative `{other}` (expected uniform, sloped or ushaped)"))),
        }
    }
}

pub fn sloped_cdf(x: f64) -> f64 {
    (2.0 * x + x * x) / 3.0
}

pub fn sloped_inverse_cdf(u: f64) -> f64 {
    ((1.0 + 3.0 * u).sqrt() - 1.0).clamp(0.0, 1.0)
}

pub fn ushaped_cdf(x: f64) -> f64 {
    let d = x - 0.5;
    d * d * d + 0.75 * x + 0.125
}

/// Closed-form inverse of the U-shaped CDF.
///
/// With `y = x - 1/2` the CDF equation becomes the depressed cubic
/// `y^3 + (3/4) y - (u - 1/2) = 0`, which has a single real root. One Newton
/// step polishes the cube-root rounding.
pub fn ushaped_inverse_cdf(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let q = u - 0.5;
    let root = (0.25 * q * q + 1.0 / 64.0).sqrt();
    let mut y = (0.5 * q + root).cbrt() + (0.5 * q - root).cbrt();
    y -= (y * y * y + 0.75 * y - q) / (3.0 * y * y + 0.75);
    (y + 0.5).clamp(0.0, 1.0)
}

fn sample_with(alternative: AlternativeKind, count: usize, seed: u64, tag: &str) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let mut rng = StreamFamily::new(seed, tag).stream(0);
    Ok((0..count).map(|_| alternative.inverse_cdf(rng.gen())).collect())
}

pub fn sample_sloped(count: usize, seed: u64) -> Result<Vec<f64>> {
    sample_with(AlternativeKind::Sloped, count, seed, "sloped")
}

pub fn sample_ushaped(count: usize, seed: u64) -> Result<Vec<f64>> {
    sample_with(AlternativeKind::UShaped, count, seed, "ushaped")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub alternative: AlternativeKind,
    pub kind: DistanceKind,
    pub c: f64,
    pub k: usize,
    pub n: usize,
    pub rejection_prob: f64,
    pub replications: usize,
}

/// Distances of `cfg.replications` histograms of `n` draws from `alternative`.
pub fn simulate_distances(
    alternative: AlternativeKind,
    kind: DistanceKind,
    k: usize,
    n: usize,
    cfg: &McConfig,
) -> Result<Vec<f64>> {
    validate_design(k, n)?;
    cfg.validate()?;
    let family = StreamFamily::new(cfg.master_seed, POWER_TAG);
    let binner = Binner::new(k);
    with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || vec![0u64; k],
                |counts, i| {
                    let mut rng = family.stream(i as u64);
                    fill_counts(&mut rng, n, &binner, counts, |r| alternative.inverse_cdf(r.gen()));
                    distance_from_counts(counts, n as u64, kind)
                },
            )
            .collect()
    })
}

/// Fraction of histograms drawn from `alternative` whose distance exceeds `c`.
pub fn rejection_probability(
    alternative: AlternativeKind,
    kind: DistanceKind,
    c: f64,
    k: usize,
    n: usize,
    cfg: &McConfig,
) -> Result<PowerResult> {
    validate_threshold(c)?;
    let d = simulate_distances(alternative, kind, k, n, cfg)?;
    let rejected = d.iter().filter(|&&x| x > c).count();
    Ok(PowerResult {
        alternative,
        kind,
        c,
        k,
        n,
        rejection_prob: rejected as f64 / d.len() as f64,
        replications: d.len(),
    })
}
