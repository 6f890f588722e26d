use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::histogram::Histogram;
use crate::rng::substream;

use super::generator::{generate_histogram_with_retries, GeneratorSpec, DEFAULT_STEPS};

pub const DEFAULT_PER_CATEGORY: usize = 25;
pub const STUDY_BIN_COUNTS: [usize; 4] = [5, 6, 8, 10];
pub const STUDY_DISTANCES: [f64; 10] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6];
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub k: usize,
    pub target_d: f64,
}

/// The 40 categories of the original labeling study: bin counts 5, 6, 8, 10
/// crossed with L1 distances 0.1 to 0.5 in steps of 0.05, plus 0.6.
pub fn study_categories() -> Vec<Category> {
    STUDY_BIN_COUNTS
        .iter()
        .flat_map(|&k| STUDY_DISTANCES.iter().map(move |&target_d| Category { k, target_d }))
        .collect()
}

/// One deck entry as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeckItem {
    pub id: u32,
    pub k: usize,
    pub heights: Vec<f64>,
    pub target_d: f64,
}

impl DeckItem {
    pub fn histogram(&self) -> Result<Histogram> {
        Histogram::from_heights(self.heights.clone())
    }

    pub fn category(&self) -> Category {
        Category { k: self.k, target_d: self.target_d }
    }

    /// What a labeler gets to see: no category, no distance.
    pub fn display(&self) -> DisplayItem {
        DisplayItem { histogram_id: self.id, k: self.k, heights: self.heights.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayItem {
    pub histogram_id: u32,
    pub k: usize,
    pub heights: Vec<f64>,
}

/// Shuffled study deck. Serialized as a plain JSON array of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DeckItem>", into = "Vec<DeckItem>")]
pub struct StudyDeck {
    items: Vec<DeckItem>,
}

impl From<StudyDeck> for Vec<DeckItem> {
    fn from(deck: StudyDeck) -> Self {
        deck.items
    }
}

impl TryFrom<Vec<DeckItem>> for StudyDeck {
    type Error = crate::error::Error;

    fn try_from(items: Vec<DeckItem>) -> Result<Self> {
        StudyDeck::from_items(items)
    }
}

impl StudyDeck {
    pub fn from_items(items: Vec<DeckItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("deck is empty"));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(item.id) {
                return Err(invalid(format!("duplicate histogram id {}", item.id)));
            }
            if item.k != item.heights.len() {
                return Err(invalid(format!("item {}: k = {} but {} heights", item.id, item.k, item.heights.len())));
            }
            Histogram::from_heights(item.heights.clone())
                .map_err(|e| invalid(format!("item {}: {e}", item.id)))?;
        }
        Ok(StudyDeck { items })
    }

    pub fn items(&self) -> &[DeckItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&DeckItem> {
        self.items.iter().find(|item| item.id == id)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// Generates `per_category` histograms per category and shuffles them.
///
/// Item `j` of category `i` is generated from a seed derived from
/// `(shuffle_seed, i * per_category + j)`; ids are assigned in shuffled order.
pub fn generate_deck(categories: &[Category], per_category: usize, shuffle_seed: u64) -> Result<StudyDeck> {
    if per_category == 0 {
        return Err(invalid("per_category must be at least 1"));
    }
    if categories.is_empty() {
        return Err(invalid("no categories"));
    }
    let mut items = Vec::with_capacity(categories.len() * per_category);
    for (ci, cat) in categories.iter().enumerate() {
        for j in 0..per_category {
            let index = (ci * per_category + j) as u64;
            let seed = substream(shuffle_seed, "deck-item", index).gen();
            let spec = GeneratorSpec { k: cat.k, target_d: cat.target_d, steps: DEFAULT_STEPS, seed };
            let hist = generate_histogram_with_retries(&spec, MAX_ATTEMPTS)?;
            items.push(DeckItem { id: 0, k: cat.k, heights: hist.heights().to_vec(), target_d: cat.target_d });
        }
    }
    items.shuffle(&mut substream(shuffle_seed, "shuffle", 0));
    for (id, item) in items.iter_mut().enumerate() {
        item.id = id as u32;
    }
    Ok(StudyDeck { items })
}

/// Deck parameters as accepted by the CLI and the study service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeckSpec {
    pub per_category: usize,
    pub shuffle_seed: u64,
    pub categories: Option<Vec<Category>>,
}

impl Default for DeckSpec {
    fn default() -> Self {
        DeckSpec { per_category: DEFAULT_PER_CATEGORY, shuffle_seed: 0, categories: None }
    }
}

impl DeckSpec {
    pub fn build(&self) -> Result<StudyDeck> {
        let categories = self.categories.clone().unwrap_or_else(study_categories);
        generate_deck(&categories, self.per_category, self.shuffle_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{distance, DistanceKind};

    #[test]
    fn study_default_deck() {
        let deck = DeckSpec::default().build().unwrap();
        assert_eq!(deck.len(), 1000);
        assert_eq!(study_categories().len(), 40);
        for cat in study_categories() {
            let n = deck.items().iter().filter(|i| i.category() == cat).count();
            assert_eq!(n, 25);
        }
        let ids: HashSet<u32> = deck.items().iter().map(|i| i.id).collect();
        assert_eq!(ids.len(), 1000);
        for item in deck.items() {
            let d = distance(&item.histogram().unwrap(), DistanceKind::L1);
            assert!((d - item.target_d).abs() < 1e-9);
        }
    }

    #[test]
    fn single_item_deck() {
        let deck = generate_deck(&[Category { k: 5, target_d: 0.3 }], 1, 9).unwrap();
        assert_eq!(deck.len(), 1);
    }

    #[test]
    fn deterministic_order() {
        let spec = DeckSpec { per_category: 2, shuffle_seed: 77, categories: None };
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        assert_eq!(a, b);
        let c = DeckSpec { shuffle_seed: 78, ..spec }.build().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shuffle_preserves_generated_items() {
        // Unshuffled generation with the same seeds produces the same multiset.
        let cats = study_categories();
        let deck = generate_deck(&cats, 3, 5).unwrap();
        for (ci, cat) in cats.iter().enumerate() {
            for j in 0..3 {
                let seed = substream(5, "deck-item", (ci * 3 + j) as u64).gen();
                let spec = GeneratorSpec { k: cat.k, target_d: cat.target_d, steps: DEFAULT_STEPS, seed };
                let h = generate_histogram_with_retries(&spec, MAX_ATTEMPTS).unwrap();
                assert_eq!(deck.items().iter().filter(|i| i.heights == h.heights()).count(), 1);
            }
        }
    }

    #[test]
    fn file_round_trip_and_display_blinding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deck.json");
        let deck = DeckSpec { per_category: 1, ..Default::default() }.build().unwrap();
        deck.save(&path).unwrap();
        let loaded = StudyDeck::load(&path).unwrap();
        assert_eq!(loaded, deck);
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(raw.is_array());
        assert!(raw[0].get("target_d").is_some());
        let shown = serde_json::to_value(deck.items()[0].display()).unwrap();
        assert!(shown.get("target_d").is_none());
        assert_eq!(shown["histogram_id"], deck.items()[0].id);
    }

    #[test]
    fn malformed_decks_are_rejected() {
        assert!(serde_json::from_str::<StudyDeck>("[]").is_err());
        let dup = r#"[{"id":1,"k":2,"heights":[1,1],"target_d":0},{"id":1,"k":2,"heights":[1,1],"target_d":0}]"#;
        assert!(serde_json::from_str::<StudyDeck>(dup).is_err());
        let bad_k = r#"[{"id":1,"k":3,"heights":[1,1],"target_d":0}]"#;
        assert!(serde_json::from_str::<StudyDeck>(bad_k).is_err());
        assert!(generate_deck(&study_categories(), 0, 1).is_err());
    }
}
