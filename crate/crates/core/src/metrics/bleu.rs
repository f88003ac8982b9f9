use std::collections::HashMap;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::{check_parallel, MetricError};

pub const MAX_ORDER: usize = 4;

/// Treatment of n-gram orders with zero clipped matches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// A zero match count zeroes the whole score.
    #[default]
    None,
    /// Replace a zero match count by the given epsilon.
    AddEpsilon(f64),
}

impl Smoothing {
    pub const SENTENCE_DEFAULT: Smoothing = Smoothing::AddEpsilon(0.1);
}

/// Integer sufficient statistics for BLEU over one or more pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl AddAssign for NgramStats {
    fn add_assign(&mut self, o: Self) {
        for k in 0..MAX_ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
        self.candidate_len += o.candidate_len;
        self.reference_len += o.reference_len;
    }
}

fn ngram_counts<T: Eq + std::hash::Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl NgramStats {
    /// Clipped n-gram matches of one candidate against one reference.
    pub fn of_pair<T: Eq + std::hash::Hash>(candidate: &[T], reference: &[T]) -> Self {
        let mut s = NgramStats {
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let cand = ngram_counts(candidate, n);
            let refc = ngram_counts(reference, n);
            s.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
            s.matches[n - 1] = cand
                .iter()
                .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }
}

/// Cumulative BLEU-n on the 0–100 scale: the brevity penalty times the
/// geometric mean of the modified precisions of orders `1..=n`. Orders with
/// no candidate n-grams at all are left out of the mean; an empty candidate
/// scores 100 against an empty reference and 0 otherwise.
pub fn bleu_from_stats(stats: &NgramStats, n: usize, smoothing: Smoothing) -> Result<f64, MetricError> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(MetricError::Order(n));
    }
    let (c, r) = (stats.candidate_len, stats.reference_len);
    if c == 0 {
        return Ok(if r == 0 { 100.0 } else { 0.0 });
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for k in 0..n {
        let total = stats.totals[k];
        if total == 0 {
            continue;
        }
        let matches = match (stats.matches[k], smoothing) {
            (0, Smoothing::None) => return Ok(0.0),
            (0, Smoothing::AddEpsilon(eps)) => eps,
            (m, _) => m as f64,
        };
        log_sum += (matches / total as f64).ln();
        used += 1;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok((100.0 * bp * (log_sum / used as f64).exp()).clamp(0.0, 100.0))
}

/// Corpus-level BLEU-n over parallel token sequences.
pub fn bleu_n<T: Eq + std::hash::Hash>(
    candidates: &[Vec<T>],
    references: &[Vec<T>],
    n: usize,
    smoothing: Smoothing,
) -> Result<f64, MetricError> {
    check_parallel(candidates, references)?;
    let mut stats = NgramStats::default();
    for (c, r) in candidates.iter().zip(references) {
        stats += NgramStats::of_pair(c, r);
    }
    bleu_from_stats(&stats, n, smoothing)
}

/// Single-pair BLEU-n.
pub fn sentence_bleu<T: Eq + std::hash::Hash>(candidate: &[T], reference: &[T], n: usize, smoothing: Smoothing) -> Result<f64, MetricError> {
    bleu_from_stats(&NgramStats::of_pair(candidate, reference), n, smoothing)
}
