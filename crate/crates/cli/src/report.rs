//! Rendering of command results as JSON or CSV.

use std::io::Write;
use std::path::Path;

use rankbins::study::{StudyAnalysis, StudyDeck};
use rankbins::{BinSearchResult, DistanceKind, Histogram, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A result in both output encodings.
#[derive(Debug)]
pub struct Report {
    json: Value,
    csv: Vec<u8>,
}

fn csv_of<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

impl Report {
    pub fn write(&self, format: Format, mut out: impl Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.json)?;
                out.write_all(b"\n")?;
            }
            Format::Csv => out.write_all(&self.csv)?,
        }
        out.flush()?;
        Ok(())
    }

    /// One record as a JSON object, several as an array; one CSV row each.
    pub fn rows<T: Serialize>(rows: &[T]) -> Result<Self> {
        let json = match rows {
            [one] => serde_json::to_value(one)?,
            many => serde_json::to_value(many)?,
        };
        Ok(Report { json, csv: csv_of(rows)? })
    }

    pub fn histogram(h: &Histogram) -> Self {
        let mut csv = String::from("bin,count,height\n");
        for (j, height) in h.heights().iter().enumerate() {
            let count = h.counts().map(|c| c[j].to_string()).unwrap_or_default();
            csv.push_str(&format!("{j},{count},{height}\n"));
        }
        Report { json: serde_json::to_value(h).expect("histogram serializes"), csv: csv.into_bytes() }
    }

    pub fn distances(values: Vec<(DistanceKind, f64)>) -> Self {
        let mut csv = String::from("kind,distance\n");
        let mut json = serde_json::Map::new();
        for (kind, d) in values {
            csv.push_str(&format!("{kind},{d}\n"));
            json.insert(kind.to_string(), json!(d));
        }
        Report { json: Value::Object(json), csv: csv.into_bytes() }
    }

    pub fn bin_search(result: &BinSearchResult) -> Result<Self> {
        #[derive(Serialize)]
        struct Row {
            k: usize,
            c: f64,
            gap: f64,
            selected: bool,
        }
        let rows = result.per_k.iter().map(|r| Row { k: r.k, c: r.c, gap: r.gap, selected: r.k == result.k_opt });
        Ok(Report { json: serde_json::to_value(result)?, csv: csv_of(rows)? })
    }

    pub fn deck(deck: &StudyDeck) -> Result<Self> {
        let mut csv = String::from("id,k,target_d,heights\n");
        for item in deck.items() {
            let heights: Vec<String> = item.heights.iter().map(f64::to_string).collect();
            csv.push_str(&format!("{},{},{},{}\n", item.id, item.k, item.target_d, heights.join(" ")));
        }
        Ok(Report { json: serde_json::to_value(deck)?, csv: csv.into_bytes() })
    }

    pub fn deck_summary(deck: &StudyDeck, path: &Path) -> Self {
        let path = path.display().to_string();
        Report {
            csv: format!("path,items\n{path},{}\n", deck.len()).into_bytes(),
            json: json!({ "path": path, "items": deck.len() }),
        }
    }

    pub fn analysis(analysis: &StudyAnalysis) -> Result<Self> {
        #[derive(Serialize)]
        struct Row {
            kind: DistanceKind,
            c_minus: f64,
            c_acc: f64,
            c_plus: f64,
            mcr_acc: f64,
            mcr_minus: f64,
            mcr_plus: f64,
            minus_crossed: bool,
            plus_crossed: bool,
        }
        let rows = analysis.kinds.iter().map(|ka| {
            let t = &ka.thresholds;
            Row {
                kind: ka.kind,
                c_minus: t.thresholds.c_minus,
                c_acc: t.thresholds.c_acc,
                c_plus: t.thresholds.c_plus,
                mcr_acc: t.mcr_acc,
                mcr_minus: t.mcr_minus,
                mcr_plus: t.mcr_plus,
                minus_crossed: t.minus_crossed,
                plus_crossed: t.plus_crossed,
            }
        });
        Ok(Report { json: serde_json::to_value(analysis)?, csv: csv_of(rows)? })
    }
}
