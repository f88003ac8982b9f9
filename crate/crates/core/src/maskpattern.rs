//! Turning stems into training examples under the end-to-end and sequential
//! mask patterns, plus static shuffle expansion of distractor order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::N_DISTRACTORS;
use crate::promptforge::{Field, Segment, Stem, Target, Task};

pub const DEFAULT_JOINER: &str = "‖";

#[derive(Debug, thiserror::Error)]
pub enum MaskError {
    #[error("stem for item {item} has task {task}; expected DG")]
    NotDg { item: String, task: Task },
    #[error("stem for item {item} has {masks} mask slots; expected exactly one")]
    MaskSlots { item: String, masks: usize },
    #[error("stem for item {item} does not carry {N_DISTRACTORS} distractors")]
    BadTarget { item: String },
    #[error("stem for item {item} has no text target")]
    NotText { item: String },
    #[error("item {item}: distractor `{distractor}` contains the joiner `{joiner}`")]
    JoinerInDistractor {
        item: String,
        distractor: String,
        joiner: String,
    },
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

/// Abstract mask-token kinds, written to files as literal token strings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskKind {
    #[serde(rename = "[MASK]")]
    Span,
    #[default]
    #[serde(rename = "[sMASK]")]
    SentSpan,
    #[serde(rename = "[gMASK]")]
    Gen,
}

impl MaskKind {
    pub fn token(self) -> &'static str {
        match self {
            MaskKind::Span => "[MASK]",
            MaskKind::SentSpan => "[sMASK]",
            MaskKind::Gen => "[gMASK]",
        }
    }
}

impl FromStr for MaskKind {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().trim_matches(|c| c == '[' || c == ']') {
            "mask" | "span" => Ok(MaskKind::Span),
            "smask" | "sent_span" | "sentspan" => Ok(MaskKind::SentSpan),
            "gmask" | "gen" => Ok(MaskKind::Gen),
            _ => Err(MaskError::Unknown {
                what: "mask kind",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    E2e,
    Seq,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::E2e => "e2e",
            Pattern::Seq => "seq",
        })
    }
}

impl FromStr for Pattern {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e2e" | "end-to-end" => Ok(Pattern::E2e),
            "seq" | "sequential" => Ok(Pattern::Seq),
            _ => Err(MaskError::Unknown {
                what: "mask pattern",
                value: s.to_string(),
            }),
        }
    }
}

/// One serialized (input, target) pair. `chain_pos` is set exactly for
/// sequential examples and `permutation_id` exactly for shuffled ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub item_id: String,
    pub task: Task,
    pub pattern: Pattern,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_pos: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_id: Option<u32>,
    pub input_segments: Vec<Segment>,
    pub mask_kind: MaskKind,
    pub target: String,
}

fn single_mask(stem: &Stem) -> Result<usize, MaskError> {
    let masks: Vec<usize> = stem
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_mask())
        .map(|(i, _)| i)
        .collect();
    match masks[..] {
        [i] => Ok(i),
        _ => Err(MaskError::MaskSlots {
            item: stem.item_id.clone(),
            masks: masks.len(),
        }),
    }
}

fn dg_distractors(stem: &Stem) -> Result<&[String], MaskError> {
    if stem.task != Task::Dg {
        return Err(MaskError::NotDg {
            item: stem.item_id.clone(),
            task: stem.task,
        });
    }
    match stem.target.as_list() {
        Some(d) if d.len() == N_DISTRACTORS => Ok(d),
        _ => Err(MaskError::BadTarget {
            item: stem.item_id.clone(),
        }),
    }
}

fn is_prev_slot(s: &Segment) -> bool {
    matches!(
        s,
        Segment::Field {
            field: Field::PrevDistractors,
            ..
        }
    )
}

/// Stem segments with the mask set to `kind` and any empty previous-distractor
/// placeholder removed.
fn base_input(stem: &Stem, kind: MaskKind) -> Vec<Segment> {
    stem.segments
        .iter()
        .filter(|s| !is_prev_slot(s))
        .map(|s| match s {
            Segment::Mask { .. } => Segment::Mask { mask: kind },
            other => other.clone(),
        })
        .collect()
}

fn example_id(stem: &Stem, pattern: Pattern, chain_pos: Option<u8>) -> String {
    let mut id = format!("{}:{}", stem.item_id, stem.task.as_str().to_ascii_lowercase());
    if let Some(p) = stem.permutation_id {
        id.push_str(&format!(":p{p}"));
    }
    id.push_str(&format!(":{pattern}"));
    if let Some(k) = chain_pos {
        id.push_str(&format!(":{k}"));
    }
    id
}

/// One example whose target is all three distractors joined by `joiner`.
pub fn emit_e2e(stem: &Stem, mask_kind: MaskKind, joiner: &str) -> Result<TrainingExample, MaskError> {
    let distractors = dg_distractors(stem)?;
    single_mask(stem)?;
    if let Some(d) = distractors.iter().find(|d| d.contains(joiner)) {
        return Err(MaskError::JoinerInDistractor {
            item: stem.item_id.clone(),
            distractor: d.clone(),
            joiner: joiner.to_string(),
        });
    }
    Ok(TrainingExample {
        id: example_id(stem, Pattern::E2e, None),
        item_id: stem.item_id.clone(),
        task: Task::Dg,
        pattern: Pattern::E2e,
        chain_pos: None,
        permutation_id: stem.permutation_id,
        input_segments: base_input(stem, mask_kind),
        mask_kind,
        target: distractors.join(joiner),
    })
}

/// Inverse of the e2e target construction.
pub fn split_e2e_target<'a>(target: &'a str, joiner: &str) -> Vec<&'a str> {
    target.split(joiner).collect()
}

/// Three chained examples. Example `k` sees distractors `1..k` (each
/// followed by a separator) inserted before the mask, or at the template's
/// previous-distractor slot if it has one, and predicts distractor `k`.
pub fn emit_sequential(stem: &Stem, mask_kind: MaskKind) -> Result<Vec<TrainingExample>, MaskError> {
    let distractors = dg_distractors(stem)?;
    single_mask(stem)?;
    let insert_at = stem.segments.iter().position(is_prev_slot);
    let base = base_input(stem, mask_kind);
    let insert_at = insert_at.unwrap_or_else(|| base.iter().position(Segment::is_mask).expect("one mask"));

    Ok((0..N_DISTRACTORS)
        .map(|k| {
            let chain_pos = k as u8 + 1;
            let mut input = base.clone();
            let prefix = distractors[..k]
                .iter()
                .flat_map(|d| [Segment::field(Field::PrevDistractors, d.clone()), Segment::Sep]);
            input.splice(insert_at..insert_at, prefix);
            TrainingExample {
                id: example_id(stem, Pattern::Seq, Some(chain_pos)),
                item_id: stem.item_id.clone(),
                task: Task::Dg,
                pattern: Pattern::Seq,
                chain_pos: Some(chain_pos),
                permutation_id: stem.permutation_id,
                input_segments: input,
                mask_kind,
                target: distractors[k].clone(),
            }
        })
        .collect())
}

/// Examples for auxiliary (QA, CoT, MCQA) stems: one input, one text target.
pub fn emit_single(stem: &Stem, mask_kind: MaskKind) -> Result<TrainingExample, MaskError> {
    single_mask(stem)?;
    let target = stem
        .target
        .as_text()
        .ok_or_else(|| MaskError::NotText {
            item: stem.item_id.clone(),
        })?
        .to_string();
    Ok(TrainingExample {
        id: example_id(stem, Pattern::E2e, None),
        item_id: stem.item_id.clone(),
        task: stem.task,
        pattern: Pattern::E2e,
        chain_pos: None,
        permutation_id: stem.permutation_id,
        input_segments: base_input(stem, mask_kind),
        mask_kind,
        target,
    })
}

/// Emits a stream of stems under `pattern`; non-DG stems go through
/// [`emit_single`].
pub fn emit_all(stems: &[Stem], pattern: Pattern, mask_kind: MaskKind, joiner: &str) -> Result<Vec<TrainingExample>, MaskError> {
    let mut out = Vec::with_capacity(stems.len());
    for stem in stems {
        match (stem.task, pattern) {
            (Task::Dg, Pattern::E2e) => out.push(emit_e2e(stem, mask_kind, joiner)?),
            (Task::Dg, Pattern::Seq) => out.extend(emit_sequential(stem, mask_kind)?),
            _ => out.push(emit_single(stem, mask_kind)?),
        }
    }
    Ok(out)
}

/// The six orderings of three slots, in lexicographic order. A permutation id
/// is an index into this table.
pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Distinct reorderings of a distractor triple, each with the id of the
/// first permutation producing it.
pub fn distinct_permutations(distractors: &[String]) -> Vec<(u32, Vec<String>)> {
    let mut seen = HashSet::new();
    PERMUTATIONS
        .iter()
        .enumerate()
        .filter_map(|(id, perm)| {
            let ordered: Vec<String> = perm.iter().map(|&i| distractors[i].clone()).collect();
            seen.insert(ordered.clone()).then_some((id as u32, ordered))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub stems_in: usize,
    pub dg_stems_in: usize,
    pub stems_out: usize,
    /// DG stems out per DG stem in; at most 6.
    pub dg_ratio: f64,
}

/// Replaces every DG stem by one copy per distinct ordering of its
/// distractors. Other stems pass through unchanged. The seed only decides
/// the order of the output, never its membership.
pub fn shuffle_expand(stems: &[Stem], seed: u64) -> Result<(Vec<Stem>, ExpansionReport), MaskError> {
    let mut out = Vec::new();
    let mut dg_in = 0;
    let mut dg_out = 0;
    for stem in stems {
        if stem.task != Task::Dg {
            out.push(stem.clone());
            continue;
        }
        let distractors = dg_distractors(stem)?;
        dg_in += 1;
        for (id, ordered) in distinct_permutations(distractors) {
            let mut copy = stem.clone();
            copy.target = Target::List(ordered);
            copy.permutation_id = Some(id);
            out.push(copy);
            dg_out += 1;
        }
    }
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let report = ExpansionReport {
        stems_in: stems.len(),
        dg_stems_in: dg_in,
        stems_out: out.len(),
        dg_ratio: if dg_in == 0 { 0.0 } else { dg_out as f64 / dg_in as f64 },
    };
    Ok((out, report))
}
