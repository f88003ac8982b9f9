use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ForgeError;

/// Training task a stem or example belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Task {
    Dg,
    Qa,
    Cot,
    Mcqa,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Dg, Task::Qa, Task::Cot, Task::Mcqa];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Dg => "DG",
            Task::Qa => "QA",
            Task::Cot => "CoT",
            Task::Mcqa => "MCQA",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}` (expected DG, QA, CoT or MCQA)")]
pub struct UnknownTask(pub String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dg" => Ok(Task::Dg),
            "qa" => Ok(Task::Qa),
            "cot" => Ok(Task::Cot),
            "mcqa" => Ok(Task::Mcqa),
            _ => Err(UnknownTask(s.to_string())),
        }
    }
}

impl TryFrom<String> for Task {
    type Error = UnknownTask;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Task> for String {
    fn from(t: Task) -> Self {
        t.as_str().to_string()
    }
}

/// Question-aware (ft1), answer-aware (ft2) and question-enhanced
/// answer-aware (ft3) input layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ft1,
    Ft2,
    Ft3,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ft1 => "ft1",
            Strategy::Ft2 => "ft2",
            Strategy::Ft3 => "ft3",
        })
    }
}

impl FromStr for Strategy {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ft1" => Ok(Strategy::Ft1),
            "ft2" => Ok(Strategy::Ft2),
            "ft3" => Ok(Strategy::Ft3),
            _ => Err(ForgeError::UnknownStrategy(s.to_string())),
        }
    }
}

/// Item fields a template can reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "C")]
    Context,
    #[serde(rename = "Q")]
    Question,
    #[serde(rename = "A")]
    Answer,
    #[serde(rename = "Options")]
    Options,
    /// Previously generated distractors in a sequential chain.
    #[serde(rename = "D_prev")]
    PrevDistractors,
}

impl Field {
    pub fn symbol(self) -> &'static str {
        match self {
            Field::Context => "C",
            Field::Question => "Q",
            Field::Answer => "A",
            Field::Options => "Options",
            Field::PrevDistractors => "D_prev",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateSegment {
    Literal(String),
    Slot(Field),
    Sep,
    Mask,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub task: Task,
    pub segments: Vec<TemplateSegment>,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, task: Task, segments: Vec<TemplateSegment>) -> Self {
        Self {
            id: id.into(),
            task,
            segments,
        }
    }

    pub fn mask_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s, TemplateSegment::Mask)).count()
    }

    pub fn has_slot(&self, field: Field) -> bool {
        self.segments.contains(&TemplateSegment::Slot(field))
    }

    /// DG templates need at least one mask, auxiliary tasks exactly one.
    pub fn validate(&self) -> Result<(), ForgeError> {
        let masks = self.mask_count();
        let ok = match self.task {
            Task::Dg => masks >= 1,
            _ => masks == 1,
        };
        if !ok {
            return Err(ForgeError::MaskCount {
                template: self.id.clone(),
                task: self.task,
                masks,
            });
        }
        if self.has_slot(Field::PrevDistractors) && self.task != Task::Dg {
            return Err(ForgeError::ForbiddenSlot {
                template: self.id.clone(),
                field: Field::PrevDistractors,
            });
        }
        Ok(())
    }
}

/// Templates used by the builders. A missing entry makes the corresponding
/// builder fail with [`ForgeError::MissingTemplate`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ft1: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ft2: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ft3: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cot: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcqa: Option<PromptTemplate>,
}

pub const DEFAULT_DG_PROMPT: &str = "请根据上文生成三个干扰项：";
pub const DEFAULT_QA_PROMPT: &str = "请根据上文回答问题：";
pub const DEFAULT_COT_PROMPT: &str = "请先推断正确答案，再生成三个干扰项：";
pub const DEFAULT_MCQA_PROMPT: &str = "请选出正确答案的选项：";

impl TemplateSet {
    /// Shipped Chinese defaults. Layouts:
    /// ft1 `C [SEP] Q [SEP] P [MASK]`, ft2 `C [SEP] A [SEP] P [MASK]`,
    /// ft3 `C [SEP] Q [SEP] A [SEP] P [MASK]`, qa/cot `C [SEP] Q [SEP] P [MASK]`,
    /// mcqa `C [SEP] Q [SEP] Options [SEP] P [MASK]`.
    pub fn defaults() -> Self {
        use Field::*;
        use TemplateSegment::{Literal, Mask, Sep, Slot};
        let lit = |s: &str| Literal(s.to_string());
        Self {
            ft1: Some(PromptTemplate::new(
                "ft1",
                Task::Dg,
                vec![Slot(Context), Sep, Slot(Question), Sep, lit(DEFAULT_DG_PROMPT), Mask],
            )),
            ft2: Some(PromptTemplate::new(
                "ft2",
                Task::Dg,
                vec![Slot(Context), Sep, Slot(Answer), Sep, lit(DEFAULT_DG_PROMPT), Mask],
            )),
            ft3: Some(PromptTemplate::new(
                "ft3",
                Task::Dg,
                vec![
                    Slot(Context),
                    Sep,
                    Slot(Question),
                    Sep,
                    Slot(Answer),
                    Sep,
                    lit(DEFAULT_DG_PROMPT),
                    Mask,
                ],
            )),
            qa: Some(PromptTemplate::new(
                "qa",
                Task::Qa,
                vec![Slot(Context), Sep, Slot(Question), Sep, lit(DEFAULT_QA_PROMPT), Mask],
            )),
            cot: Some(PromptTemplate::new(
                "cot",
                Task::Cot,
                vec![Slot(Context), Sep, Slot(Question), Sep, lit(DEFAULT_COT_PROMPT), Mask],
            )),
            mcqa: Some(PromptTemplate::new(
                "mcqa",
                Task::Mcqa,
                vec![
                    Slot(Context),
                    Sep,
                    Slot(Question),
                    Sep,
                    Slot(Options),
                    Sep,
                    lit(DEFAULT_MCQA_PROMPT),
                    Mask,
                ],
            )),
        }
    }

    pub fn strategy(&self, s: Strategy) -> Result<&PromptTemplate, ForgeError> {
        let (t, name) = match s {
            Strategy::Ft1 => (&self.ft1, "ft1"),
            Strategy::Ft2 => (&self.ft2, "ft2"),
            Strategy::Ft3 => (&self.ft3, "ft3"),
        };
        t.as_ref().ok_or(ForgeError::MissingTemplate(name))
    }

    pub fn task(&self, task: Task) -> Result<&PromptTemplate, ForgeError> {
        let (t, name) = match task {
            Task::Qa => (&self.qa, "qa"),
            Task::Cot => (&self.cot, "cot"),
            Task::Mcqa => (&self.mcqa, "mcqa"),
            Task::Dg => return Err(ForgeError::MissingTemplate("dg (use a strategy template)")),
        };
        t.as_ref().ok_or(ForgeError::MissingTemplate(name))
    }

    /// Loads a JSON template file; absent keys stay absent.
    pub fn from_json(text: &str) -> Result<Self, ForgeError> {
        let set: TemplateSet = serde_json::from_str(text).map_err(|e| ForgeError::TemplateFile(e.to_string()))?;
        for t in [&set.ft1, &set.ft2, &set.ft3, &set.qa, &set.cot, &set.mcqa].into_iter().flatten() {
            t.validate()?;
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let d = TemplateSet::defaults();
        for t in [&d.ft1, &d.ft2, &d.ft3, &d.qa, &d.cot, &d.mcqa] {
            t.as_ref().unwrap().validate().unwrap();
        }
    }

    #[test]
    fn template_json_round_trip() {
        let d = TemplateSet::defaults();
        let json = serde_json::to_string_pretty(&d).unwrap();
        assert!(json.contains(r#""slot": "C""#));
        assert_eq!(TemplateSet::from_json(&json).unwrap(), d);
    }

    #[test]
    fn aux_template_needs_exactly_one_mask() {
        let t = PromptTemplate::new("bad", Task::Qa, vec![TemplateSegment::Mask, TemplateSegment::Mask]);
        assert!(matches!(t.validate(), Err(ForgeError::MaskCount { masks: 2, .. })));
        let t = PromptTemplate::new("bad", Task::Dg, vec![TemplateSegment::Slot(Field::Context)]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn task_names() {
        assert_eq!("CoT".parse::<Task>().unwrap(), Task::Cot);
        assert_eq!(serde_json::to_string(&Task::Mcqa).unwrap(), r#""MCQA""#);
        assert!(serde_json::from_str::<Task>(r#""summarize""#).is_err());
    }
}
