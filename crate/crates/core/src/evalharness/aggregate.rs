use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnnotationRecord;
use crate::corpus::LengthBucket;

/// Mean relevance and complexity of one table cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellMeans {
    /// Number of ratings behind the means; zero for transcribed cells.
    pub n: usize,
    pub relevance: Option<f64>,
    pub complexity: Option<f64>,
}

impl CellMeans {
    pub fn from_values(relevance: f64, complexity: f64) -> Self {
        CellMeans {
            n: 0,
            relevance: Some(relevance),
            complexity: Some(complexity),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.relevance.is_none()
    }
}

/// One table row: a cell per length bucket plus their average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub buckets: BTreeMap<LengthBucket, CellMeans>,
    pub average: CellMeans,
}

impl ModelSummary {
    /// Row from already-aggregated (relevance, complexity) cells, short to
    /// long.
    pub fn from_cells(model: &str, cells: [(f64, f64); 3]) -> Self {
        let buckets: BTreeMap<_, _> = LengthBucket::ALL
            .iter()
            .zip(cells)
            .map(|(&b, (r, c))| (b, CellMeans::from_values(r, c)))
            .collect();
        let average = average_cells(buckets.values());
        ModelSummary {
            model: model.to_string(),
            buckets,
            average,
        }
    }
}

/// Equal-weight mean of the non-empty cells.
pub fn average_cells<'a>(cells: impl IntoIterator<Item = &'a CellMeans>) -> CellMeans {
    let filled: Vec<&CellMeans> = cells.into_iter().filter(|c| !c.is_empty()).collect();
    if filled.is_empty() {
        return CellMeans::default();
    }
    let k = filled.len() as f64;
    let mean = |f: fn(&CellMeans) -> Option<f64>| {
        let mut v: Vec<f64> = filled.iter().filter_map(|c| f(c)).collect();
        v.sort_by(f64::total_cmp);
        v.into_iter().sum::<f64>() / k
    };
    CellMeans {
        n: filled.iter().map(|c| c.n).sum(),
        relevance: Some(mean(|c| c.relevance)),
        complexity: Some(mean(|c| c.complexity)),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub models: Vec<ModelSummary>,
}

/// Per model (sorted by name): arithmetic means per length bucket over all
/// ratings of all raters, and the average of the non-empty bucket cells.
/// Sums are of small integers and therefore exact, so the result does not
/// depend on record order.
pub fn aggregate_annotations(records: &[AnnotationRecord]) -> AnnotationReport {
    let mut sums: BTreeMap<&str, BTreeMap<LengthBucket, (usize, u64, u64)>> = BTreeMap::new();
    for r in records {
        let cell = sums
            .entry(r.model.as_str())
            .or_default()
            .entry(r.length_bucket)
            .or_default();
        cell.0 += 1;
        cell.1 += u64::from(r.relevance.get());
        cell.2 += u64::from(r.complexity.get());
    }
    let models = sums
        .into_iter()
        .map(|(model, cells)| {
            let buckets: BTreeMap<LengthBucket, CellMeans> = LengthBucket::ALL
                .iter()
                .map(|&b| {
                    let means = match cells.get(&b) {
                        Some(&(n, rel, cpx)) => CellMeans {
                            n,
                            relevance: Some(rel as f64 / n as f64),
                            complexity: Some(cpx as f64 / n as f64),
                        },
                        None => CellMeans::default(),
                    };
                    (b, means)
                })
                .collect();
            let average = average_cells(buckets.values());
            ModelSummary {
                model: model.to_string(),
                buckets,
                average,
            }
        })
        .collect();
    AnnotationReport { models }
}

/// Half-away-from-zero rounding to two decimals, as printed in tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Plain-text table, one row per model, two decimals.
pub fn render_table(report: &AnnotationReport) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut s = String::from("model\tshort_rel\tshort_cpx\tmedium_rel\tmedium_cpx\tlong_rel\tlong_cpx\tavg_rel\tavg_cpx\n");
    for m in &report.models {
        let name = if m.model.is_empty() { "-" } else { &m.model };
        s.push_str(name);
        for c in m.buckets.values().chain(std::iter::once(&m.average)) {
            let _ = write!(s, "\t{}\t{}", fmt(c.relevance), fmt(c.complexity));
        }
        s.push('\n');
    }
    s
}
