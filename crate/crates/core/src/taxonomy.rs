//! Templated vs. non-templated question classification.
//!
//! A templated question is context-independent boilerplate ("which of the
//! following is correct?"). Classification looks at the question string
//! only, after width and case folding, against an ordered list of wildcard
//! patterns; the first matching pattern wins.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::McqItem;
use crate::text::fold_width_case;

const DEFAULT_PATTERNS: &str = include_str!("../data/default_patterns.txt");

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("cannot classify an empty question")]
    EmptyQuestion,
    #[error("duplicate pattern id `{0}`")]
    DuplicateId(String),
    #[error("pattern `{0}` is empty")]
    EmptyPattern(String),
    #[error("pattern file line {line}: expected `id = pattern`")]
    Syntax { line: usize },
    #[error("pattern file is not a valid JSON list: {0}")]
    Json(#[from] serde_json::Error),
    #[error("templated class requires a pattern id, non-templated forbids one")]
    InconsistentClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Templated,
    NonTemplated,
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuestionKind::Templated => "templated",
            QuestionKind::NonTemplated => "non_templated",
        })
    }
}

/// `kind == Templated` exactly when `matched_pattern` is set; enforced on
/// construction and deserialization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ClassRepr")]
pub struct QuestionClass {
    pub kind: QuestionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_pattern: Option<String>,
}

#[derive(Deserialize)]
struct ClassRepr {
    kind: QuestionKind,
    #[serde(default)]
    matched_pattern: Option<String>,
}

impl TryFrom<ClassRepr> for QuestionClass {
    type Error = TaxonomyError;

    fn try_from(r: ClassRepr) -> Result<Self, Self::Error> {
        match (r.kind, r.matched_pattern) {
            (QuestionKind::Templated, Some(id)) => Ok(Self::templated(id)),
            (QuestionKind::NonTemplated, None) => Ok(Self::non_templated()),
            _ => Err(TaxonomyError::InconsistentClass),
        }
    }
}

impl QuestionClass {
    pub fn templated(pattern_id: impl Into<String>) -> Self {
        Self {
            kind: QuestionKind::Templated,
            matched_pattern: Some(pattern_id.into()),
        }
    }

    pub fn non_templated() -> Self {
        Self {
            kind: QuestionKind::NonTemplated,
            matched_pattern: None,
        }
    }

    pub fn is_templated(&self) -> bool {
        self.kind == QuestionKind::Templated
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub id: String,
    pub pattern: String,
    #[serde(skip)]
    folded: String,
}

impl Pattern {
    pub fn new(id: impl Into<String>, pattern: impl Into<String>) -> Self {
        let pattern = pattern.into();
        Self {
            id: id.into(),
            folded: fold_width_case(&pattern),
            pattern,
        }
    }

    /// Matches an already folded question.
    fn matches_folded(&self, question: &str) -> bool {
        wildcard_match(&self.folded, question)
    }
}

/// Ordered, id-unique list of templated-question patterns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSet {
    patterns: Vec<Pattern>,
}

impl PatternSet {
    pub fn new(patterns: Vec<Pattern>) -> Result<Self, TaxonomyError> {
        let mut seen = HashSet::new();
        for p in &patterns {
            if !seen.insert(p.id.as_str()) {
                return Err(TaxonomyError::DuplicateId(p.id.clone()));
            }
            if p.folded.is_empty() {
                return Err(TaxonomyError::EmptyPattern(p.id.clone()));
            }
        }
        Ok(Self { patterns })
    }

    pub fn empty() -> Self {
        Self { patterns: Vec::new() }
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    /// Reads either a JSON list of `{id, pattern}` objects or plain-text
    /// `id = pattern` lines (blank lines and `#` comments ignored).
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        if text.trim_start().starts_with('[') {
            #[derive(Deserialize)]
            struct Entry {
                id: String,
                pattern: String,
            }
            let entries: Vec<Entry> = serde_json::from_str(text)?;
            return Self::new(entries.into_iter().map(|e| Pattern::new(e.id, e.pattern)).collect());
        }
        let mut patterns = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, pat) = line.split_once('=').ok_or(TaxonomyError::Syntax { line: n + 1 })?;
            let id = id.trim();
            if id.is_empty() {
                return Err(TaxonomyError::Syntax { line: n + 1 });
            }
            patterns.push(Pattern::new(id, pat.trim()));
        }
        Self::new(patterns)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.patterns).expect("patterns serialize")
    }
}

impl Default for PatternSet {
    /// The shipped pattern list.
    fn default() -> Self {
        Self::parse(DEFAULT_PATTERNS).expect("bundled pattern file is valid")
    }
}

/// `*` matches any (possibly empty) substring; everything else is literal.
/// The whole text must match.
fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

pub fn classify(question: &str, patterns: &PatternSet) -> Result<QuestionClass, TaxonomyError> {
    let folded = fold_width_case(question);
    if folded.is_empty() {
        return Err(TaxonomyError::EmptyQuestion);
    }
    Ok(patterns
        .patterns
        .iter()
        .find(|p| p.matches_folded(&folded))
        .map(|p| QuestionClass::templated(p.id.clone()))
        .unwrap_or_else(QuestionClass::non_templated))
}

/// Classifies every item and stores the class in its tags.
pub fn tag_items(items: &mut [McqItem], patterns: &PatternSet) -> Result<(), TaxonomyError> {
    for item in items {
        item.tags.class = Some(classify(&item.question, patterns)?);
    }
    Ok(())
}

/// Hit count per matched pattern id; patterns with no hits are omitted.
pub fn audit(items: &[McqItem], patterns: &PatternSet) -> BTreeMap<String, usize> {
    let mut hits = BTreeMap::new();
    for item in items {
        if let Ok(QuestionClass {
            matched_pattern: Some(id),
            ..
        }) = classify(&item.question, patterns)
        {
            *hits.entry(id).or_insert(0) += 1;
        }
    }
    hits
}
