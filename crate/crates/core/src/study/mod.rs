//! Labeling-study tooling: histogram generator, deck, label store and
//! analysis.

pub mod analysis;
pub mod deck;
pub mod generator;
pub mod labels;

pub use analysis::{
    acceptance_rate_curve, analyze, bin_decision_correlation, default_grid, derive_thresholds, join_labels,
    misclassification_curve, AcceptanceCurve, AcceptancePoint, DerivedThresholds, KindAnalysis, LabeledHistogram,
    McrPoint, MisclassificationCurve, StudyAnalysis, DEFAULT_DELTA,
};
pub use deck::{generate_deck, study_categories, Category, DeckItem, DeckSpec, DisplayItem, StudyDeck};
pub use generator::{generate_histogram, generate_histogram_with_retries, GeneratorSpec};
pub use labels::{read_labels, LabelLog, LabelRecord};
