//! Choosing the number of bins of ensemble rank histograms.
//!
//! Ranks are rebinned to any bin count through a randomized transformation
//! ([`rank_transform`]). Flatness is measured by L2, L1 or Kullback-Leibler
//! distances ([`divergence`]) whose null distributions are simulated
//! ([`monte_carlo`]). The bin count is then chosen so that the critical value
//! of the test matches an inspector's acceptance threshold
//! ([`bin_selection`]). [`alt_distributions`] estimates rejection
//! probabilities under sloped and U-shaped alternatives, and [`study`] holds
//! the tooling of the labeling study that calibrates acceptance thresholds.

pub mod alt_distributions;
pub mod bin_selection;
pub mod divergence;
pub mod error;
pub mod histogram;
pub mod monte_carlo;
pub mod rank_transform;
pub mod rng;
pub mod study;

pub use alt_distributions::{rejection_probability, sample_sloped, sample_ushaped, AlternativeKind, PowerResult};
pub use bin_selection::{false_reject_curve, optimal_bin_count, select_bin_count, BinRow, BinSearchResult, BinSearchSpec, CurveCell, SelectionRule};
pub use divergence::{classify, distance, DistanceKind, ThresholdSet, Verdict};
pub use error::{Error, Result};
pub use histogram::Histogram;
pub use monte_carlo::{
    critical_value, false_reject_probability, simulate_null_distances, CriticalValueResult, McConfig,
    NullDistribution, ThresholdCache,
};
pub use rank_transform::{bin_samples, rank_histogram, transform_ranks, RankSeries, TransformedSample};
