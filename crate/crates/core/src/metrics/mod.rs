//! Character-level BLEU-1..4, ROUGE-L and METEOR for Chinese distractors,
//! and run scoring with positional or best-match pairing of the three
//! predicted distractors against the three references.
//!
//! All corpus aggregates are accumulated as integer counts (BLEU, METEOR) or
//! as an order-independent sum (ROUGE-L), so a corpus score does not depend
//! on record order or on how the work was split across threads.

mod bleu;
mod meteor;
mod rouge;
mod run;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu_from_stats, bleu_n, sentence_bleu, NgramStats, Smoothing, MAX_ORDER};
pub use meteor::{align, meteor, meteor_from_stats, Alignment, MeteorParams, MeteorStats};
pub use rouge::{lcs_len, rouge_l, rouge_l_pair, DEFAULT_ROUGE_BETA};
pub use run::{score_run, DistractorRecord, MetricReport, Pairing, RecordScore};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("candidate and reference lists differ in length ({candidates} vs {references})")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("n-gram order {0} out of range 1..=4")]
    Order(usize),
    #[error("record {item_id}: expected 3 distractors, got {predicted} predicted and {reference} reference")]
    DistractorCount {
        item_id: String,
        predicted: usize,
        reference: usize,
    },
    #[error("no reference for predicted item {0}")]
    MissingReference(String),
    #[error("item {0} appears more than once in the predictions")]
    DuplicatePrediction(String),
    #[error("unknown pairing `{0}` (expected positional or best_match)")]
    UnknownPairing(String),
}

/// Tokens of one string; concatenating them gives the string back.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.concat()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

/// Extension point for word segmenters. Implementations must be lossless.
pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> TokenSeq;
}

/// One token per Unicode scalar value.
#[derive(Clone, Copy, Debug, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn tokenize(&self, text: &str) -> TokenSeq {
        TokenSeq(text.chars().map(String::from).collect())
    }
}

pub fn tokenize(text: &str) -> TokenSeq {
    CharTokenizer.tokenize(text)
}

fn check_parallel<T>(candidates: &[T], references: &[T]) -> Result<(), MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

/// Sums after sorting, so the result is independent of input order.
fn order_free_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}
