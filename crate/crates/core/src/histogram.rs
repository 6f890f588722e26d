//! Histograms on the unit interval, rescaled so that a flat histogram has all
//! heights equal to one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A histogram with `k` equal-width bins on `[0, 1)`.
///
/// Heights are normalized so that their mean is one: a histogram built from
/// counts has `h_j = k * count_j / n`. Histograms that do not come from data
/// (the study deck) carry heights only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHistogram")]
pub struct Histogram {
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<u64>>,
    heights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(invalid(format!("bin count must be at least 2, got {}", counts.len())));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::NoSamples);
        }
        let k = counts.len();
        let heights = counts
            .iter()
            .map(|&c| (k as u64 * c) as f64 / n as f64)
            .collect();
        Ok(Histogram { k, counts: Some(counts), heights, n: Some(n) })
    }

    /// Builds a histogram from normalized heights. The heights must be
    /// non-negative and finite; their sum is not rescaled.
    pub fn from_heights(heights: Vec<f64>) -> Result<Self> {
        if heights.len() < 2 {
            return Err(invalid(format!("bin count must be at least 2, got {}", heights.len())));
        }
        for (index, &value) in heights.iter().enumerate() {
            if !value.is_finite() {
                return Err(invalid(format!("height {value} in bin {index} is not finite")));
            }
            if value < 0.0 {
                return Err(Error::NegativeHeight { index, value });
            }
        }
        Ok(Histogram { k: heights.len(), counts: None, heights, n: None })
    }

    pub fn flat(k: usize) -> Result<Self> {
        Self::from_heights(vec![1.0; k])
    }

    pub fn bin_count(&self) -> usize {
        self.k
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn sample_size(&self) -> Option<u64> {
        self.n
    }
}

#[derive(Deserialize)]
struct RawHistogram {
    k: Option<usize>,
    counts: Option<Vec<u64>>,
    heights: Option<Vec<f64>>,
    n: Option<u64>,
}

impl TryFrom<RawHistogram> for Histogram {
    type Error = Error;

    fn try_from(raw: RawHistogram) -> Result<Self> {
        let hist = match (raw.counts, raw.heights) {
            (Some(counts), _) => Histogram::from_counts(counts)?,
            (None, Some(heights)) => Histogram::from_heights(heights)?,
            (None, None) => return Err(invalid("histogram needs `counts` or `heights`")),
        };
        if let Some(k) = raw.k {
            if k != hist.k {
                return Err(invalid(format!("k = {k} but {} bins given", hist.k)));
            }
        }
        if let (Some(n), Some(actual)) = (raw.n, hist.n) {
            if n != actual {
                return Err(invalid(format!("n = {n} but counts sum to {actual}")));
            }
        }
        Ok(hist)
    }
}

/// Maps values in `[0, 1)` to bin indices `0..k` using half-open bins
/// `[j/k, (j+1)/k)`.
///
/// The index is checked against the floating-point edges `j as f64 / k as f64`
/// so that a value equal to a correctly rounded edge always lands in the bin
/// that starts there.
#[derive(Debug, Clone)]
pub struct Binner {
    scale: f64,
    edges: Vec<f64>,
}

impl Binner {
    pub fn new(k: usize) -> Self {
        let edges = (0..=k).map(|j| j as f64 / k as f64).collect();
        Binner { scale: k as f64, edges }
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    #[inline]
    pub fn index(&self, x: f64) -> usize {
        let k = self.bins();
        let mut j = ((x * self.scale) as usize).min(k - 1);
        if x < self.edges[j] {
            j -= 1;
        } else if j + 1 < k && x >= self.edges[j + 1] {
            j += 1;
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_follow_counts() {
        let h = Histogram::from_counts(vec![1, 2]).unwrap();
        assert_eq!(h.sample_size(), Some(3));
        assert!((h.heights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((h.heights()[1] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(Histogram::from_counts(vec![0, 0]), Err(Error::NoSamples)));
        assert!(Histogram::from_counts(vec![3]).is_err());
        assert!(matches!(
            Histogram::from_heights(vec![1.5, -0.5]),
            Err(Error::NegativeHeight { index: 1, .. })
        ));
    }

    #[test]
    fn json_shape() {
        let h = Histogram::from_counts(vec![1, 3]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&h).unwrap();
        assert_eq!(v["k"], 2);
        assert_eq!(v["n"], 4);
        assert_eq!(v["counts"], serde_json::json!([1, 3]));
        assert_eq!(v["heights"], serde_json::json!([0.5, 1.5]));
        let back: Histogram = serde_json::from_value(v).unwrap();
        assert_eq!(back, h);

        let bad = serde_json::from_str::<Histogram>(r#"{"k": 3, "heights": [1.0, 1.0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn binner_respects_rounded_edges() {
        // fl(1/49) * 49 rounds below 1; the edge check must still put it in bin 1.
        let b = Binner::new(49);
        assert_eq!(b.index(1.0 / 49.0), 1);
        assert_eq!(b.index(0.0), 0);
        assert_eq!(b.index(1.0 - f64::EPSILON / 2.0), 48);
        let b = Binner::new(3);
        assert_eq!(b.index(2.0 / 6.0), 1);
        assert_eq!(b.index(4.0 / 6.0), 2);
    }
}
