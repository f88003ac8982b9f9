//! Model-input stems for the three fine-tuning strategies and the
//! auxiliary QA, hard-CoT and multi-choice QA tasks.

mod build;
mod cot;
mod template;

use serde::{Deserialize, Serialize};

use crate::maskpattern::MaskKind;
use crate::text::char_len;

pub use build::{
    build_dg, build_ft1, build_ft2, build_ft3, build_hard_cot, build_mcqa, build_qa, route, Forge,
};
pub use cot::CotScheme;
pub use template::{
    Field, PromptTemplate, Strategy, Task, TemplateSegment, TemplateSet, UnknownTask, DEFAULT_COT_PROMPT,
    DEFAULT_DG_PROMPT, DEFAULT_MCQA_PROMPT, DEFAULT_QA_PROMPT,
};

pub const DEFAULT_SEP_TOKEN: &str = "[SEP]";
pub const DEFAULT_MAX_INPUT_LEN: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error("template `{template}` is for task {found}, expected {expected}")]
    WrongTask {
        template: String,
        expected: Task,
        found: Task,
    },
    #[error("template `{template}` for task {task} has {masks} mask slot(s)")]
    MaskCount { template: String, task: Task, masks: usize },
    #[error("template `{template}` must contain field {}", field.symbol())]
    MissingSlot { template: String, field: Field },
    #[error("template `{template}` must not contain field {}", field.symbol())]
    ForbiddenSlot { template: String, field: Field },
    #[error("no `{0}` template configured")]
    MissingTemplate(&'static str),
    #[error("template file: {0}")]
    TemplateFile(String),
    #[error("unknown strategy `{0}` (expected ft1, ft2 or ft3)")]
    UnknownStrategy(String),
    #[error("item {item}: field {} is empty", field.symbol())]
    EmptyField { item: String, field: Field },
    #[error("item {item}: text contains the reserved delimiter `{delimiter}`")]
    ReservedDelimiter { item: String, delimiter: String },
    #[error("item {item} is templated; hard CoT is only built for non-templated questions")]
    TemplatedCot { item: String },
    #[error("item {item}: stem needs {needed} tokens without context, limit is {limit}")]
    TooLong { item: String, needed: usize, limit: usize },
    #[error("malformed hard-CoT target: {0}")]
    CotParse(String),
}

/// One rendered piece of a stem. Field segments remember which item field
/// they came from; this is used by containment checks and never changes the
/// rendered text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Field { field: Field, text: String },
    Literal { text: String },
    Sep,
    Mask { mask: MaskKind },
}

impl Segment {
    pub fn field(field: Field, text: impl Into<String>) -> Self {
        Segment::Field {
            field,
            text: text.into(),
        }
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, Segment::Mask { .. })
    }

    /// Length in tokens: characters of text, one per separator, masks free.
    pub fn input_len(&self) -> usize {
        match self {
            Segment::Field { text, .. } | Segment::Literal { text } => char_len(text),
            Segment::Sep => 1,
            Segment::Mask { .. } => 0,
        }
    }
}

pub fn input_len(segments: &[Segment]) -> usize {
    segments.iter().map(Segment::input_len).sum()
}

/// Concatenates segments, writing separators and masks as their tokens.
pub fn render(segments: &[Segment], sep_token: &str) -> String {
    let mut out = String::new();
    for s in segments {
        match s {
            Segment::Field { text, .. } | Segment::Literal { text } => out.push_str(text),
            Segment::Sep => out.push_str(sep_token),
            Segment::Mask { mask } => out.push_str(mask.token()),
        }
    }
    out
}

/// Like [`render`], but wraps each field as `⟪symbol:text⟫`, so a field can
/// be searched for without accidental hits inside other fields.
pub fn render_with_sentinels(segments: &[Segment]) -> String {
    let mut out = String::new();
    for s in segments {
        match s {
            Segment::Field { field, text } => {
                out.push('⟪');
                out.push_str(field.symbol());
                out.push(':');
                out.push_str(text);
                out.push('⟫');
            }
            Segment::Literal { text } => out.push_str(text),
            Segment::Sep => out.push_str(DEFAULT_SEP_TOKEN),
            Segment::Mask { mask } => out.push_str(mask.token()),
        }
    }
    out
}

/// The sentinel-wrapped form of a field value, for use with
/// [`render_with_sentinels`].
pub fn sentinel(field: Field, text: &str) -> String {
    format!("⟪{}:{}⟫", field.symbol(), text)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Text(String),
    List(Vec<String>),
}

impl Target {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Target::Text(t) => Some(t),
            Target::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            Target::List(l) => Some(l),
            Target::Text(_) => None,
        }
    }
}

/// What the QA and CoT auxiliary tasks are trained to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxTarget {
    Answer,
    Distractors,
    AnswerThenDistractors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgeConfig {
    pub max_input_len: usize,
    pub sep_token: String,
    /// Mask kind written into stems; expansion may override it.
    pub mask_kind: MaskKind,
    pub cot_scheme: CotScheme,
    pub qa_target: AuxTarget,
    pub cot_target: AuxTarget,
    /// Base seed for multi-choice option shuffling.
    pub mcqa_seed: u64,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self {
            max_input_len: DEFAULT_MAX_INPUT_LEN,
            sep_token: DEFAULT_SEP_TOKEN.to_string(),
            mask_kind: MaskKind::default(),
            cot_scheme: CotScheme::default(),
            qa_target: AuxTarget::Answer,
            cot_target: AuxTarget::AnswerThenDistractors,
            mcqa_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stem {
    pub item_id: String,
    pub strategy: Strategy,
    pub task: Task,
    pub segments: Vec<Segment>,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Stem {
    pub fn contains_field(&self, field: Field) -> bool {
        self.segments
            .iter()
            .any(|s| matches!(s, Segment::Field { field: f, .. } if *f == field))
    }

    pub fn input_len(&self) -> usize {
        input_len(&self.segments)
    }

    pub fn mask_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_mask()).count()
    }

    pub fn render(&self, sep_token: &str) -> String {
        render(&self.segments, sep_token)
    }

    pub fn render_with_sentinels(&self) -> String {
        render_with_sentinels(&self.segments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_json_shape() {
        let segs = vec![
            Segment::field(Field::Context, "天空"),
            Segment::Sep,
            Segment::Literal { text: "P".into() },
            Segment::Mask { mask: MaskKind::SentSpan },
        ];
        let json = serde_json::to_string(&segs).unwrap();
        assert_eq!(
            json,
            r#"[{"kind":"field","field":"C","text":"天空"},{"kind":"sep"},{"kind":"literal","text":"P"},{"kind":"mask","mask":"[sMASK]"}]"#
        );
        assert_eq!(render(&segs, "[SEP]"), "天空[SEP]P[sMASK]");
        assert_eq!(input_len(&segs), 4);
    }

    #[test]
    fn sentinels_separate_fields() {
        let segs = vec![Segment::field(Field::Context, "蓝色的天"), Segment::field(Field::Question, "什么")];
        let r = render_with_sentinels(&segs);
        assert!(!r.contains(&sentinel(Field::Answer, "蓝色")));
        assert!(r.contains(&sentinel(Field::Question, "什么")));
    }
}
