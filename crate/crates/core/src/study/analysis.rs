//! Analysis of collected labels: misclassification curves of the threshold
//! classifier, personal thresholds, acceptance rates and the bin/decision
//! correlation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::divergence::{classify, distance, DistanceKind, ThresholdSet, Verdict};
use crate::error::{invalid, Error, Result};
use crate::histogram::Histogram;

use super::deck::StudyDeck;
use super::labels::LabelRecord;

pub const DEFAULT_DELTA: f64 = 0.05;
const MCR_EPS: f64 = 1e-12;

/// A labeled histogram, joined from the deck.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledHistogram {
    pub histogram_id: u32,
    pub histogram: Histogram,
    pub verdict: Verdict,
}

impl LabeledHistogram {
    pub fn k(&self) -> usize {
        self.histogram.bin_count()
    }
}

pub fn join_labels(deck: &StudyDeck, labels: &[LabelRecord]) -> Result<Vec<LabeledHistogram>> {
    let index: HashMap<u32, _> = deck.items().iter().map(|item| (item.id, item)).collect();
    labels
        .iter()
        .map(|label| {
            let item = index.get(&label.histogram_id).ok_or(Error::UnknownHistogram(label.histogram_id))?;
            Ok(LabeledHistogram { histogram_id: item.id, histogram: item.histogram()?, verdict: label.verdict })
        })
        .collect()
}

/// Threshold grid: `0, 0.01, ..., 0.70` for L1 and L2, `0, 0.005, ..., 0.35`
/// for KL.
pub fn default_grid(kind: DistanceKind) -> Vec<f64> {
    let per_unit = match kind {
        DistanceKind::L1 | DistanceKind::L2 => 100.0,
        DistanceKind::Kl => 200.0,
    };
    (0..=70).map(|i| i as f64 / per_unit).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McrPoint {
    pub c: f64,
    pub mcr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisclassificationCurve {
    pub kind: DistanceKind,
    pub points: Vec<McrPoint>,
}

/// Share of labels on which the classifier with threshold `c` disagrees with
/// the labeler, for every `c` in `grid`.
pub fn misclassification_curve(
    labeled: &[LabeledHistogram],
    kind: DistanceKind,
    grid: &[f64],
) -> Result<MisclassificationCurve> {
    if labeled.is_empty() {
        return Err(Error::NoLabels);
    }
    if grid.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let scored: Vec<(f64, Verdict)> = labeled.iter().map(|l| (distance(&l.histogram, kind), l.verdict)).collect();
    let total = scored.len() as f64;
    let points = grid
        .iter()
        .map(|&c| {
            let wrong = scored.iter().filter(|(d, v)| classify(*d, c) != *v).count();
            McrPoint { c, mcr: wrong as f64 / total }
        })
        .collect();
    Ok(MisclassificationCurve { kind, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedThresholds {
    pub thresholds: ThresholdSet,
    pub mcr_acc: f64,
    pub mcr_minus: f64,
    pub mcr_plus: f64,
    /// `false` when the curve never rises by `delta` below `c_acc`; `c_minus`
    /// is then the first grid point.
    pub minus_crossed: bool,
    /// As `minus_crossed`, for the side above `c_acc`.
    pub plus_crossed: bool,
}

/// `c_acc` minimizes the misclassification rate (smallest `c` on ties);
/// `c_minus` and `c_plus` are the nearest grid points on either side whose
/// rate is at least `delta` above the minimum.
pub fn derive_thresholds(curve: &MisclassificationCurve, delta: f64) -> Result<DerivedThresholds> {
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::EmptyCurve);
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(invalid(format!("delta must be non-negative, got {delta}")));
    }
    let acc = pts
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.mcr < pts[best].mcr { i } else { best });
    let level = pts[acc].mcr + delta - MCR_EPS;
    let minus = pts[..acc].iter().rposition(|p| p.mcr >= level);
    let plus = pts[acc + 1..].iter().position(|p| p.mcr >= level).map(|i| i + acc + 1);
    let minus_idx = minus.unwrap_or(0);
    let plus_idx = plus.unwrap_or(pts.len() - 1);
    Ok(DerivedThresholds {
        thresholds: ThresholdSet {
            kind: curve.kind,
            c_minus: pts[minus_idx].c,
            c_acc: pts[acc].c,
            c_plus: pts[plus_idx].c,
        },
        mcr_acc: pts[acc].mcr,
        mcr_minus: pts[minus_idx].mcr,
        mcr_plus: pts[plus_idx].mcr,
        minus_crossed: minus.is_some(),
        plus_crossed: plus.is_some(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptancePoint {
    /// Upper end of the interval `(upper - width, upper]`.
    pub upper: f64,
    pub accepted: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCurve {
    pub k: usize,
    pub points: Vec<AcceptancePoint>,
}

/// Number of aggregation intervals per unit distance: width 0.1 for L1 and
/// L2, 0.05 for KL.
fn intervals_per_unit(kind: DistanceKind) -> f64 {
    match kind {
        DistanceKind::L1 | DistanceKind::L2 => 10.0,
        DistanceKind::Kl => 20.0,
    }
}

/// Index `j` of the interval `((j-1)/per_unit, j/per_unit]` containing `d`,
/// checked against the correctly rounded edges.
fn interval_index(d: f64, per_unit: f64) -> i64 {
    let mut j = (d * per_unit).ceil() as i64;
    while j > 0 && d <= (j - 1) as f64 / per_unit {
        j -= 1;
    }
    while d > j as f64 / per_unit {
        j += 1;
    }
    j
}

/// Acceptance rate per bin count over distance intervals. Empty intervals
/// produce no point.
pub fn acceptance_rate_curve(labeled: &[LabeledHistogram], kind: DistanceKind) -> Result<Vec<AcceptanceCurve>> {
    if labeled.is_empty() {
        return Err(Error::NoLabels);
    }
    let per_unit = intervals_per_unit(kind);
    let mut cells: BTreeMap<usize, BTreeMap<i64, (usize, usize)>> = BTreeMap::new();
    for l in labeled {
        let j = interval_index(distance(&l.histogram, kind), per_unit);
        let cell = cells.entry(l.k()).or_default().entry(j).or_insert((0, 0));
        cell.1 += 1;
        if l.verdict.is_accept() {
            cell.0 += 1;
        }
    }
    Ok(cells
        .into_iter()
        .map(|(k, row)| AcceptanceCurve {
            k,
            points: row
                .into_iter()
                .map(|(j, (accepted, total))| AcceptancePoint {
                    upper: j as f64 / per_unit,
                    accepted,
                    total,
                    rate: accepted as f64 / total as f64,
                })
                .collect(),
        })
        .collect())
}

/// Pearson correlation between the bin count and the verdict (accept = 1).
pub fn bin_decision_correlation(labeled: &[LabeledHistogram]) -> Result<f64> {
    if labeled.len() < 2 {
        return Err(Error::UndefinedCorrelation("need at least two labels".into()));
    }
    let xs: Vec<f64> = labeled.iter().map(|l| l.k() as f64).collect();
    let ys: Vec<f64> = labeled.iter().map(|l| if l.verdict.is_accept() { 1.0 } else { 0.0 }).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("all labeled histograms have the same bin count".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("all verdicts are identical".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAnalysis {
    pub kind: DistanceKind,
    pub curve: MisclassificationCurve,
    pub thresholds: DerivedThresholds,
    pub acceptance_rates: Vec<AcceptanceCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAnalysis {
    pub labels: usize,
    pub kinds: Vec<KindAnalysis>,
    pub correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_error: Option<String>,
}

impl StudyAnalysis {
    pub fn kind(&self, kind: DistanceKind) -> Option<&KindAnalysis> {
        self.kinds.iter().find(|k| k.kind == kind)
    }
}

/// Full analysis of a label log against its deck, for all three distances.
pub fn analyze(deck: &StudyDeck, labels: &[LabelRecord], delta: f64) -> Result<StudyAnalysis> {
    if labels.is_empty() {
        return Err(Error::NoLabels);
    }
    let labeled = join_labels(deck, labels)?;
    let kinds = DistanceKind::ALL
        .iter()
        .map(|&kind| {
            let curve = misclassification_curve(&labeled, kind, &default_grid(kind))?;
            let thresholds = derive_thresholds(&curve, delta)?;
            let acceptance_rates = acceptance_rate_curve(&labeled, kind)?;
            Ok(KindAnalysis { kind, curve, thresholds, acceptance_rates })
        })
        .collect::<Result<Vec<_>>>()?;
    let (correlation, correlation_error) = match bin_decision_correlation(&labeled) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(StudyAnalysis { labels: labeled.len(), kinds, correlation, correlation_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeled(heights: &[f64], verdict: Verdict) -> LabeledHistogram {
        LabeledHistogram { histogram_id: 0, histogram: Histogram::from_heights(heights.to_vec()).unwrap(), verdict }
    }

    fn curve_from(mcr: &[f64]) -> MisclassificationCurve {
        MisclassificationCurve {
            kind: DistanceKind::L2,
            points: mcr.iter().enumerate().map(|(i, &m)| McrPoint { c: i as f64 / 100.0, mcr: m }).collect(),
        }
    }

    #[test]
    fn grids() {
        let g = default_grid(DistanceKind::L2);
        assert_eq!(g.len(), 71);
        assert_eq!(g[10], 0.1);
        assert_eq!(*g.last().unwrap(), 0.7);
        let g = default_grid(DistanceKind::Kl);
        assert_eq!(g[10], 0.05);
        assert_eq!(*g.last().unwrap(), 0.35);
    }

    #[test]
    fn all_accept_above_max_distance() {
        let ls = vec![labeled(&[1.2, 0.8], Verdict::Accept), labeled(&[1.5, 0.5], Verdict::Accept)];
        let c = misclassification_curve(&ls, DistanceKind::L1, &[0.0, 0.3, 0.6]).unwrap();
        assert_eq!(c.points[2].mcr, 0.0);
        assert_eq!(c.points[0].mcr, 1.0);
        assert_eq!(c.points[1].mcr, 0.5);
        assert!(matches!(misclassification_curve(&[], DistanceKind::L1, &[0.1]), Err(Error::NoLabels)));
    }

    #[test]
    fn v_shaped_curve_crossings() {
        // mcr(c) = (|100 c - 30| + 10) / 100: minimum 0.1 at c = 0.3, +0.05 at 0.25 and 0.35.
        let mcr: Vec<f64> = (0..=70).map(|i: i32| ((i - 30).abs() + 10) as f64 / 100.0).collect();
        let t = derive_thresholds(&curve_from(&mcr), 0.05).unwrap();
        assert_eq!(t.thresholds.c_acc, 0.3);
        assert_eq!(t.thresholds.c_minus, 0.25);
        assert_eq!(t.thresholds.c_plus, 0.35);
        assert!(t.minus_crossed && t.plus_crossed);
        assert_eq!(t.mcr_acc, 0.1);
    }

    #[test]
    fn flat_curve_flags_both_sides() {
        let t = derive_thresholds(&curve_from(&[0.3; 11]), 0.05).unwrap();
        assert_eq!(t.thresholds.c_acc, 0.0);
        assert_eq!(t.thresholds.c_minus, 0.0);
        assert_eq!(t.thresholds.c_plus, 0.1);
        assert!(!t.minus_crossed && !t.plus_crossed);
        let empty = MisclassificationCurve { kind: DistanceKind::L1, points: vec![] };
        assert!(matches!(derive_thresholds(&empty, 0.05), Err(Error::EmptyCurve)));
    }

    #[test]
    fn argmin_ties_take_smallest_c() {
        let t = derive_thresholds(&curve_from(&[0.5, 0.2, 0.2, 0.3, 0.4]), 0.1).unwrap();
        assert_eq!(t.thresholds.c_acc, 0.01);
        assert_eq!(t.thresholds.c_minus, 0.0);
        assert_eq!(t.thresholds.c_plus, 0.03);
    }

    #[test]
    fn acceptance_single_point() {
        let ls = vec![labeled(&[1.15, 0.85], Verdict::Accept)];
        let curves = acceptance_rate_curve(&ls, DistanceKind::L1).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].k, 2);
        assert_eq!(curves[0].points.len(), 1);
        assert_eq!(curves[0].points[0].upper, 0.2);
        assert_eq!(curves[0].points[0].rate, 1.0);
    }

    #[test]
    fn interval_edges_are_upper_closed() {
        assert_eq!(interval_index(0.2, 10.0), 2);
        assert_eq!(interval_index(0.3, 10.0), 3);
        assert_eq!(interval_index(0.30000000000000004, 10.0), 4);
        assert_eq!(interval_index(0.0, 10.0), 0);
        assert_eq!(interval_index(0.05, 20.0), 1);
        assert_eq!(interval_index(0.0500001, 20.0), 2);
    }

    #[test]
    fn correlation_cases() {
        let mut ls = Vec::new();
        for k in [5usize, 6, 8, 10] {
            for _ in 0..10 {
                let v = if k <= 6 { Verdict::Accept } else { Verdict::Reject };
                ls.push(labeled(&vec![1.0; k], v));
            }
        }
        let r = bin_decision_correlation(&ls).unwrap();
        assert!(r < -0.8, "{r}");
        // independent: each k has half accepts
        let mut ind = Vec::new();
        for k in [5usize, 6, 8, 10] {
            for i in 0..10 {
                let v = if i % 2 == 0 { Verdict::Accept } else { Verdict::Reject };
                ind.push(labeled(&vec![1.0; k], v));
            }
        }
        assert!(bin_decision_correlation(&ind).unwrap().abs() < 1e-12);
        let same_k = vec![labeled(&[1.0, 1.0], Verdict::Accept), labeled(&[1.5, 0.5], Verdict::Reject)];
        assert!(matches!(bin_decision_correlation(&same_k), Err(Error::UndefinedCorrelation(_))));
        assert!(bin_decision_correlation(&same_k[..1]).is_err());
    }

    proptest! {
        #[test]
        fn flipped_verdicts_complement_curve(
            hs in prop::collection::vec((prop::collection::vec(0.0f64..3.0, 2..8), any::<bool>()), 1..30)
        ) {
            let ls: Vec<_> = hs.iter().map(|(h, a)| labeled(h, if *a { Verdict::Accept } else { Verdict::Reject })).collect();
            let flipped: Vec<_> = ls.iter().cloned().map(|mut l| {
                l.verdict = if l.verdict.is_accept() { Verdict::Reject } else { Verdict::Accept };
                l
            }).collect();
            let grid = default_grid(DistanceKind::L2);
            let a = misclassification_curve(&ls, DistanceKind::L2, &grid).unwrap();
            let b = misclassification_curve(&flipped, DistanceKind::L2, &grid).unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.mcr + q.mcr - 1.0).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&p.mcr));
            }
        }

        #[test]
        fn derived_thresholds_are_ordered(mcr in prop::collection::vec(0.0f64..1.0, 1..80), delta in 0.0f64..0.3) {
            let t = derive_thresholds(&curve_from(&mcr), delta).unwrap();
            prop_assert!(t.thresholds.c_minus <= t.thresholds.c_acc);
            prop_assert!(t.thresholds.c_acc <= t.thresholds.c_plus);
            prop_assert!(mcr.iter().all(|&m| m >= t.mcr_acc));
        }
    }
}
