//! Corpus ingestion: parsing C³/LogiQA/generic records, cleaning them into
//! four-option items, deterministic splits and corpus statistics.

mod clean;
mod parse;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::taxonomy::QuestionClass;

pub use clean::{clean, CleanConfig, CleaningReport, TrueFalsePatterns};
pub use parse::{parse, parse_tagged, Format, ParseError};
pub use split::{apply_manifest, split, Ratios, SplitError, SplitManifest, Splits};
pub use stats::{stats, CorpusStats, LengthBucket, LengthHistogram};

/// Number of distractors carried by every cleaned item.
pub const N_DISTRACTORS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    C3,
    LogiQA,
    Generic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::C3 => "c3",
            Source::LogiQA => "logiqa",
            Source::Generic => "generic",
        })
    }
}

impl FromStr for Source {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::from_str(s).map(Format::source)
    }
}

/// One question as found in a source file, before cleaning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub source: Source,
    pub context: String,
    pub question: String,
    pub options: Vec<String>,
    pub answer_index: usize,
}

/// Free-form annotations carried alongside an item through the pipeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemTags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<QuestionClass>,
}

/// A cleaned multiple-choice item: context, question, answer and exactly
/// three distractors in source option order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McqItem {
    pub id: String,
    pub context: String,
    pub question: String,
    pub answer: String,
    pub distractors: [String; N_DISTRACTORS],
    #[serde(default)]
    pub tags: ItemTags,
}

impl McqItem {
    /// Builds an item from already-normalized fields and derives its id.
    pub fn new(
        context: String,
        question: String,
        answer: String,
        distractors: [String; N_DISTRACTORS],
        tags: ItemTags,
    ) -> Self {
        let id = item_id(&context, &question, &answer, &distractors);
        Self {
            id,
            context,
            question,
            answer,
            distractors,
            tags,
        }
    }

    /// Recomputes the id from content and compares it with the stored one.
    pub fn id_is_consistent(&self) -> bool {
        self.id == item_id(&self.context, &self.question, &self.answer, &self.distractors)
    }

    /// Answer first, then distractors in canonical order.
    pub fn options(&self) -> [&str; N_DISTRACTORS + 1] {
        [
            &self.answer,
            &self.distractors[0],
            &self.distractors[1],
            &self.distractors[2],
        ]
    }
}

impl From<&McqItem> for RawRecord {
    fn from(item: &McqItem) -> Self {
        RawRecord {
            source: item.tags.source.unwrap_or(Source::Generic),
            context: item.context.clone(),
            question: item.question.clone(),
            options: item.options().iter().map(|s| s.to_string()).collect(),
            answer_index: 0,
        }
    }
}

/// Stable content hash over (context, question, answer, sorted distractors).
/// Fields are length-prefixed so no choice of separator can collide.
pub fn item_id(context: &str, question: &str, answer: &str, distractors: &[String]) -> String {
    let mut sorted: Vec<&str> = distractors.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    let mut hasher = Sha256::new();
    for field in [context, question, answer].into_iter().chain(sorted) {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: &str, b: &str, c: &str) -> [String; 3] {
        [a.into(), b.into(), c.into()]
    }

    #[test]
    fn id_ignores_distractor_order() {
        let a = item_id("c", "q", "a", &d("x", "y", "z"));
        let b = item_id("c", "q", "a", &d("z", "x", "y"));
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
    }

    #[test]
    fn id_separates_field_boundaries() {
        let a = item_id("ab", "c", "a", &d("x", "y", "z"));
        let b = item_id("a", "bc", "a", &d("x", "y", "z"));
        assert_ne!(a, b);
    }

    #[test]
    fn item_json_requires_three_distractors() {
        let item = McqItem::new("c".into(), "q".into(), "a".into(), d("x", "y", "z"), ItemTags::default());
        let json = serde_json::to_string(&item).unwrap();
        let back: McqItem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, item);
        let bad = json.replace(r#","z"]"#, "]");
        assert!(serde_json::from_str::<McqItem>(&bad).is_err());
    }
}
