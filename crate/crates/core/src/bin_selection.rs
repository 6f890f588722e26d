//! Choice of the bin number whose critical value is closest to an acceptance
//! threshold.

use serde::{Deserialize, Serialize};

use crate::divergence::DistanceKind;
use crate::error::{invalid, Result};
use crate::monte_carlo::{validate_design, validate_threshold, McConfig, NullDistribution};

pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 12;

/// How the bin count is chosen from the per-`k` critical values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Minimize `|c(alpha, k, n) - c_target|`, smaller `k` on ties.
    #[default]
    Nearest,
    /// Largest `k` with `c(alpha, k, n) <= c_target`, i.e. the most bins whose
    /// false-rejection probability at `c_target` stays within `alpha`. Falls
    /// back to the smallest `k` when no critical value is that low.
    AtMost,
}

impl std::str::FromStr for SelectionRule {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(SelectionRule::Nearest),
            "at-most" | "at_most" => Ok(SelectionRule::AtMost),
            other => Err(invalid(format!("unknown selection rule `{other}` (expected nearest or at-most)"))),
        }
    }
}

impl std::fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionRule::Nearest => "nearest",
            SelectionRule::AtMost => "at-most",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSearchSpec {
    pub kind: DistanceKind,
    pub alpha: f64,
    pub n: usize,
    pub c_target: f64,
    pub k_min: usize,
    pub k_max: usize,
    #[serde(default)]
    pub rule: SelectionRule,
    pub mc: McConfig,
}

impl BinSearchSpec {
    pub fn new(kind: DistanceKind, alpha: f64, n: usize, c_target: f64, mc: McConfig) -> Self {
        BinSearchSpec { kind, alpha, n, c_target, k_min: DEFAULT_K_MIN, k_max: DEFAULT_K_MAX, rule: SelectionRule::Nearest, mc }
    }

    pub fn with_range(mut self, k_min: usize, k_max: usize) -> Self {
        self.k_min = k_min;
        self.k_max = k_max;
        self
    }

    pub fn with_rule(mut self, rule: SelectionRule) -> Self {
        self.rule = rule;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(invalid(format!("invalid bin range {}..={}", self.k_min, self.k_max)));
        }
        if self.n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        validate_threshold(self.c_target)?;
        self.mc.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub k: usize,
    pub c: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSearchResult {
    pub kind: DistanceKind,
    pub alpha: f64,
    pub n: usize,
    pub c_target: f64,
    pub rule: SelectionRule,
    pub k_opt: usize,
    pub per_k: Vec<BinRow>,
}

/// Computes `c(alpha, k, n)` for every `k` in the range and picks `k_opt` by
/// `spec.rule`. With the default rule `k_opt` minimizes `|c - c_target|`.
pub fn optimal_bin_count(spec: &BinSearchSpec) -> Result<BinSearchResult> {
    spec.validate()?;
    let mut per_k = Vec::with_capacity(spec.k_max - spec.k_min + 1);
    for k in spec.k_min..=spec.k_max {
        let c = NullDistribution::simulate(spec.kind, k, spec.n, &spec.mc)?.critical_value(spec.alpha)?;
        per_k.push(BinRow { k, c, gap: (c - spec.c_target).abs() });
    }
    Ok(BinSearchResult {
        kind: spec.kind,
        alpha: spec.alpha,
        n: spec.n,
        c_target: spec.c_target,
        rule: spec.rule,
        k_opt: select_bin_count(&per_k, spec.rule, spec.c_target),
        per_k,
    })
}

/// Applies `rule` to precomputed per-`k` rows. `rows` must be non-empty and
/// sorted by `k`.
pub fn select_bin_count(rows: &[BinRow], rule: SelectionRule, c_target: f64) -> usize {
    if rule == SelectionRule::AtMost {
        return rows.iter().filter(|r| r.c <= c_target).map(|r| r.k).max().unwrap_or(rows[0].k);
    }
    rows.iter()
        .fold(None::<&BinRow>, |best, row| match best {
            Some(b) if b.gap <= row.gap => Some(b),
            _ => Some(row),
        })
        .map(|r| r.k)
        .expect("non-empty bin range")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveCell {
    pub kind: DistanceKind,
    pub c: f64,
    pub k: usize,
    pub n: usize,
    pub probability: f64,
}

/// False-rejection probability for every `(k, n)` pair, row-major in `k`.
pub fn false_reject_curve(
    kind: DistanceKind,
    c: f64,
    k_list: &[usize],
    n_list: &[usize],
    cfg: &McConfig,
) -> Result<Vec<CurveCell>> {
    validate_threshold(c)?;
    cfg.validate()?;
    for &k in k_list {
        for &n in n_list {
            validate_design(k, n)?;
        }
    }
    let mut cells = Vec::with_capacity(k_list.len() * n_list.len());
    for &k in k_list {
        for &n in n_list {
            let probability = NullDistribution::simulate(kind, k, n, cfg)?.exceedance(c)?;
            cells.push(CurveCell { kind, c, k, n, probability });
        }
    }
    Ok(cells)
}
