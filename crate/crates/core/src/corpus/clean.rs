use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ItemTags, McqItem, RawRecord, N_DISTRACTORS};
use crate::text::{fold_width_case, normalize};

/// Option vocabularies that identify a True/False question. A record is
/// True/False when its folded option set equals one of these sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrueFalsePatterns(Vec<BTreeSet<String>>);

impl TrueFalsePatterns {
    pub fn new<I, S>(sets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator,
        S::Item: AsRef<str>,
    {
        Self(
            sets.into_iter()
                .map(|set| set.into_iter().map(|o| fold_width_case(o.as_ref())).collect())
                .collect(),
        )
    }

    pub fn matches<S: AsRef<str>>(&self, options: &[S]) -> bool {
        let set: BTreeSet<String> = options.iter().map(|o| fold_width_case(o.as_ref())).collect();
        self.0.contains(&set)
    }
}

impl Default for TrueFalsePatterns {
    fn default() -> Self {
        Self::new([
            vec!["对", "错"],
            vec!["正确", "错误"],
            vec!["对", "不对"],
            vec!["是", "否"],
            vec!["是", "不是"],
            vec!["真", "假"],
            vec!["√", "×"],
            vec!["true", "false"],
            vec!["t", "f"],
        ])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    #[serde(default)]
    pub true_false: TrueFalsePatterns,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_in: usize,
    pub dropped_true_false: usize,
    pub dropped_few_options: usize,
    pub dropped_malformed: usize,
    pub total_out: usize,
    /// Survivors that had more than four options and were cut down to the
    /// answer plus the first three other options.
    pub trimmed_extra_options: usize,
}

impl CleaningReport {
    pub fn dropped(&self) -> usize {
        self.dropped_true_false + self.dropped_few_options + self.dropped_malformed
    }
}

enum Verdict {
    Keep(McqItem, bool),
    TrueFalse,
    FewOptions,
    Malformed,
}

fn judge(rec: &RawRecord, cfg: &CleanConfig) -> Verdict {
    let context = normalize(&rec.context);
    let question = normalize(&rec.question);
    let options: Vec<String> = rec.options.iter().map(|o| normalize(o)).collect();

    if context.is_empty()
        || question.is_empty()
        || rec.answer_index >= options.len()
        || options.iter().any(String::is_empty)
    {
        return Verdict::Malformed;
    }
    let distinct: BTreeSet<&str> = options.iter().map(String::as_str).collect();
    if distinct.len() != options.len() {
        return Verdict::Malformed;
    }
    if cfg.true_false.matches(&options) {
        return Verdict::TrueFalse;
    }
    if options.len() < N_DISTRACTORS + 1 {
        return Verdict::FewOptions;
    }

    let trimmed = options.len() > N_DISTRACTORS + 1;
    let mut others = options
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != rec.answer_index)
        .map(|(_, o)| o.clone());
    let distractors: [String; N_DISTRACTORS] =
        std::array::from_fn(|_| others.next().expect("at least three non-answer options"));
    let tags = ItemTags {
        source: Some(rec.source),
        class: None,
    };
    let answer = options[rec.answer_index].clone();
    Verdict::Keep(McqItem::new(context, question, answer, distractors, tags), trimmed)
}

/// Applies the cleaning rules in order: malformed records (empty fields,
/// out-of-range answer, duplicate options) first, then True/False option
/// sets, then fewer than four options. Survivor order is preserved.
pub fn clean(records: &[RawRecord], cfg: &CleanConfig) -> (Vec<McqItem>, CleaningReport) {
    let mut report = CleaningReport {
        total_in: records.len(),
        ..Default::default()
    };
    let mut items = Vec::with_capacity(records.len());
    for rec in records {
        match judge(rec, cfg) {
            Verdict::Keep(item, trimmed) => {
                report.trimmed_extra_options += usize::from(trimmed);
                items.push(item);
            }
            Verdict::TrueFalse => report.dropped_true_false += 1,
            Verdict::FewOptions => report.dropped_few_options += 1,
            Verdict::Malformed => report.dropped_malformed += 1,
        }
    }
    report.total_out = items.len();
    (items, report)
}
