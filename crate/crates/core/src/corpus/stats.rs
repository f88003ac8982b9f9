use serde::{Deserialize, Serialize};

use super::McqItem;
use crate::taxonomy::{classify, PatternSet, QuestionKind};
use crate::text::char_len;

/// Context length class, in characters: short < 50 ≤ medium ≤ 200 < long.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthBucket {
    Short,
    Medium,
    Long,
}

impl LengthBucket {
    pub const ALL: [LengthBucket; 3] = [LengthBucket::Short, LengthBucket::Medium, LengthBucket::Long];

    pub fn from_tokens(n: usize) -> Self {
        match n {
            0..=49 => LengthBucket::Short,
            50..=200 => LengthBucket::Medium,
            _ => LengthBucket::Long,
        }
    }

    pub fn of_text(text: &str) -> Self {
        Self::from_tokens(char_len(text))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub short: usize,
    pub medium: usize,
    pub long: usize,
}

impl LengthHistogram {
    pub fn add(&mut self, bucket: LengthBucket) {
        match bucket {
            LengthBucket::Short => self.short += 1,
            LengthBucket::Medium => self.medium += 1,
            LengthBucket::Long => self.long += 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_items: usize,
    pub n_templated: usize,
    pub n_non_templated: usize,
    pub context_length_histogram: LengthHistogram,
}

/// Counts items, their question classes under `patterns`, and the context
/// length histogram.
pub fn stats(items: &[McqItem], patterns: &PatternSet) -> CorpusStats {
    let mut out = CorpusStats {
        n_items: items.len(),
        ..Default::default()
    };
    for item in items {
        // cleaned items never have an empty question, so classify is total here
        let templated = classify(&item.question, patterns)
            .map(|c| c.kind == QuestionKind::Templated)
            .unwrap_or(false);
        if templated {
            out.n_templated += 1;
        } else {
            out.n_non_templated += 1;
        }
        out.context_length_histogram.add(LengthBucket::of_text(&item.context));
    }
    out
}
