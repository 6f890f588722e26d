//! Flatness distances between a histogram and the perfectly flat histogram,
//! and the threshold classifier built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::histogram::Histogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    L2,
    L1,
    #[serde(rename = "kl")]
    Kl,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 3] = [DistanceKind::L2, DistanceKind::L1, DistanceKind::Kl];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::L2 => "l2",
            DistanceKind::L1 => "l1",
            DistanceKind::Kl => "kl",
        }
    }

    /// Distance of the fully concentrated histogram `(k, 0, ..., 0)`, the
    /// largest value the distance can take with `k` bins.
    pub fn max_distance(self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            DistanceKind::L2 => kf - 1.0,
            DistanceKind::L1 => 2.0 * (kf - 1.0) / kf,
            DistanceKind::Kl => kf.ln(),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(DistanceKind::L2),
            "l1" => Ok(DistanceKind::L1),
            "kl" => Ok(DistanceKind::Kl),
            other => Err(invalid(format!("unknown distance kind `{other}` (expected l1, l2 or kl)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accept" => Ok(Verdict::Accept),
            "reject" => Ok(Verdict::Reject),
            other => Err(invalid(format!("unknown verdict `{other}`"))),
        }
    }
}

/// Acceptance thresholds of a pessimist (`c_minus`), a typical inspector
/// (`c_acc`) and an optimist (`c_plus`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub kind: DistanceKind,
    pub c_minus: f64,
    pub c_acc: f64,
    pub c_plus: f64,
}

impl ThresholdSet {
    pub fn new(kind: DistanceKind, c_minus: f64, c_acc: f64, c_plus: f64) -> Result<Self> {
        let ok = [c_minus, c_acc, c_plus].iter().all(|c| c.is_finite() && *c >= 0.0);
        if !ok || c_minus > c_acc || c_acc > c_plus {
            return Err(invalid(format!(
                "thresholds must satisfy 0 <= c_minus <= c_acc <= c_plus, got ({c_minus}, {c_acc}, {c_plus})"
            )));
        }
        Ok(ThresholdSet { kind, c_minus, c_acc, c_plus })
    }

    /// Thresholds estimated from a labeling study with statisticians.
    pub fn reference(kind: DistanceKind) -> Self {
        let (c_minus, c_acc, c_plus) = match kind {
            DistanceKind::L2 => (0.05, 0.1, 0.2),
            DistanceKind::L1 => (0.15, 0.25, 0.35),
            DistanceKind::Kl => (0.02, 0.05, 0.09),
        };
        ThresholdSet { kind, c_minus, c_acc, c_plus }
    }
}

/// Distance of `hist` from the flat histogram.
///
/// Histograms built from counts are evaluated in integer arithmetic where
/// possible, so the result depends only on the multiset of counts.
pub fn distance(hist: &Histogram, kind: DistanceKind) -> f64 {
    match (hist.counts(), hist.sample_size()) {
        (Some(counts), Some(n)) => distance_from_counts(counts, n, kind),
        _ => heights_distance(hist.heights(), kind),
    }
}

/// Distance from raw heights, rejecting negative values.
pub fn distance_from_heights(heights: &[f64], kind: DistanceKind) -> Result<f64> {
    if heights.is_empty() {
        return Err(invalid("empty histogram"));
    }
    if let Some((index, &value)) = heights.iter().enumerate().find(|(_, h)| **h < 0.0 || h.is_nan()) {
        return Err(Error::NegativeHeight { index, value });
    }
    Ok(heights_distance(heights, kind))
}

fn heights_distance(heights: &[f64], kind: DistanceKind) -> f64 {
    let k = heights.len() as f64;
    let sum: f64 = match kind {
        DistanceKind::L2 => heights.iter().map(|h| (h - 1.0) * (h - 1.0)).sum(),
        DistanceKind::L1 => heights.iter().map(|h| (h - 1.0).abs()).sum(),
        DistanceKind::Kl => heights.iter().map(|&h| xlogx(h)).sum(),
    };
    sum / k
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Distance of the histogram with the given bin counts summing to `n`.
///
/// With `h_j = k c_j / n`:
/// L2 is `(k Σc² − n²) / n²`, L1 is `Σ|k c − n| / (k n)` and KL is
/// `(1/n) Σ c ln(k c / n)`.
pub fn distance_from_counts(counts: &[u64], n: u64, kind: DistanceKind) -> f64 {
    let k = counts.len() as u128;
    let n128 = u128::from(n);
    match kind {
        DistanceKind::L2 => {
            let sq: u128 = counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum();
            let num = k * sq - n128 * n128;
            num as f64 / (n128 * n128) as f64
        }
        DistanceKind::L1 => {
            let num: u128 = counts
                .iter()
                .map(|&c| (k * u128::from(c)).abs_diff(n128))
                .sum();
            num as f64 / (k * n128) as f64
        }
        DistanceKind::Kl => {
            let mut sorted = counts.to_vec();
            sorted.sort_unstable();
            let nf = n as f64;
            let kf = k as f64;
            let sum: f64 = sorted
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let c = c as f64;
                    c * (kf * c / nf).ln()
                })
                .sum();
            (sum / nf).clamp(0.0, kf.ln())
        }
    }
}

/// `accept` iff `d <= c`.
#[inline]
pub fn classify(d: f64, c: f64) -> Verdict {
    if d > c {
        Verdict::Reject
    } else {
        Verdict::Accept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(v: &[f64]) -> Histogram {
        Histogram::from_heights(v.to_vec()).unwrap()
    }

    #[test]
    fn flat_is_zero() {
        for k in 2..15 {
            for kind in DistanceKind::ALL {
                assert_eq!(distance(&Histogram::flat(k).unwrap(), kind), 0.0);
                let counts = vec![3u64; k];
                assert_eq!(distance_from_counts(&counts, 3 * k as u64, kind), 0.0);
            }
        }
    }

    #[test]
    fn two_bin_example() {
        let hist = h(&[1.5, 0.5]);
        assert!((distance(&hist, DistanceKind::L1) - 0.5).abs() < 1e-15);
        assert!((distance(&hist, DistanceKind::L2) - 0.25).abs() < 1e-15);
        let kl = (1.5 * 1.5f64.ln() + 0.5 * 0.5f64.ln()) / 2.0;
        assert!((distance(&hist, DistanceKind::Kl) - kl).abs() < 1e-15);
        assert!((kl - 0.130812).abs() < 1e-6);
        // Same histogram from counts (3, 1).
        let hc = Histogram::from_counts(vec![3, 1]).unwrap();
        for kind in DistanceKind::ALL {
            assert!((distance(&hc, kind) - distance(&hist, kind)).abs() < 1e-15);
        }
    }

    #[test]
    fn concentration_closed_forms() {
        for k in 2..20usize {
            let mut v = vec![0.0; k];
            v[0] = k as f64;
            let hist = h(&v);
            let kf = k as f64;
            assert!((distance(&hist, DistanceKind::L1) - 2.0 * (kf - 1.0) / kf).abs() < 1e-12);
            assert!((distance(&hist, DistanceKind::L2) - (kf - 1.0)).abs() < 1e-12);
            assert!((distance(&hist, DistanceKind::Kl) - kf.ln()).abs() < 1e-12);
            let mut counts = vec![0u64; k];
            counts[k - 1] = 17;
            for kind in DistanceKind::ALL {
                let d = distance_from_counts(&counts, 17, kind);
                assert!((d - kind.max_distance(k)).abs() < 1e-12, "{kind} {k}");
            }
        }
    }

    #[test]
    fn negative_height_is_domain_error() {
        assert!(matches!(
            distance_from_heights(&[1.0, -0.1, 1.1], DistanceKind::L2),
            Err(Error::NegativeHeight { index: 1, .. })
        ));
    }

    #[test]
    fn classifier_boundary() {
        assert_eq!(classify(0.0, 0.1), Verdict::Accept);
        assert_eq!(classify(0.1, 0.1), Verdict::Accept);
        assert_eq!(classify(0.25 + 1e-12, 0.25), Verdict::Reject);
    }

    #[test]
    fn kind_and_threshold_parsing() {
        assert_eq!("L2".parse::<DistanceKind>().unwrap(), DistanceKind::L2);
        assert_eq!("kl".parse::<DistanceKind>().unwrap(), DistanceKind::Kl);
        assert!("l3".parse::<DistanceKind>().is_err());
        assert_eq!(serde_json::to_string(&DistanceKind::Kl).unwrap(), "\"kl\"");
        assert!(ThresholdSet::new(DistanceKind::L1, 0.3, 0.2, 0.4).is_err());
        let t = ThresholdSet::reference(DistanceKind::L1);
        assert_eq!((t.c_minus, t.c_acc, t.c_plus), (0.15, 0.25, 0.35));
    }

    fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..50, 2..13).prop_filter("non-empty", |c| c.iter().sum::<u64>() > 0)
    }

    proptest! {
        #[test]
        fn counts_path_matches_heights_path(counts in counts_strategy()) {
            let n: u64 = counts.iter().sum();
            let hist = Histogram::from_counts(counts.clone()).unwrap();
            for kind in DistanceKind::ALL {
                let a = distance_from_counts(&counts, n, kind);
                let b = heights_distance(hist.heights(), kind);
                prop_assert!((a - b).abs() < 1e-12, "{} {} {}", kind, a, b);
            }
        }

        #[test]
        fn nonnegative_bounded_and_zero_only_when_flat(counts in counts_strategy()) {
            let n: u64 = counts.iter().sum();
            let k = counts.len();
            let flat = counts.iter().all(|&c| c * k as u64 == n);
            for kind in DistanceKind::ALL {
                let d = distance_from_counts(&counts, n, kind);
                prop_assert!(d >= 0.0);
                prop_assert!(d <= kind.max_distance(k) + 1e-12);
                prop_assert_eq!(d == 0.0, flat, "{} {:?}", kind, counts);
            }
        }

        #[test]
        fn permutation_invariant(mut counts in counts_strategy(), seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n: u64 = counts.iter().sum();
            let before: Vec<f64> = DistanceKind::ALL.iter().map(|&kd| distance_from_counts(&counts, n, kd)).collect();
            counts.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let after: Vec<f64> = DistanceKind::ALL.iter().map(|&kd| distance_from_counts(&counts, n, kd)).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn classify_monotone_in_threshold(d in 0.0f64..3.0, c1 in 0.0f64..3.0, c2 in 0.0f64..3.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            if classify(d, hi) == Verdict::Reject {
                prop_assert_eq!(classify(d, lo), Verdict::Reject);
            }
        }
    }
}
