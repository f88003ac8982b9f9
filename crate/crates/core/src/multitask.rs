//! Weighted multi-task objective and mixture planning.
//!
//! The composed loss is `ψ_DG + γ·ψ_QA + δ·ψ_CoT`, where each ψ is a
//! per-task mean negative log-likelihood supplied by a trainer. Multi-choice
//! QA stands in for QA on templated items and shares γ.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::maskpattern::TrainingExample;
use crate::promptforge::Task;

#[derive(Debug, thiserror::Error)]
pub enum MultitaskError {
    #[error("task weights must be finite and non-negative (gamma={gamma}, delta={delta})")]
    BadWeights { gamma: f64, delta: f64 },
    #[error("loss term {name} is not finite: {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error(transparent)]
    UnknownTask(#[from] crate::promptforge::UnknownTask),
    #[error("unknown mixture mode `{0}` (expected summed or alternating)")]
    UnknownMode(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct TaskWeights {
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    gamma: f64,
    delta: f64,
}

impl TryFrom<RawWeights> for TaskWeights {
    type Error = MultitaskError;

    fn try_from(r: RawWeights) -> Result<Self, Self::Error> {
        TaskWeights::new(r.gamma, r.delta)
    }
}

impl TaskWeights {
    pub fn new(gamma: f64, delta: f64) -> Result<Self, MultitaskError> {
        if gamma.is_finite() && delta.is_finite() && gamma >= 0.0 && delta >= 0.0 {
            Ok(Self { gamma, delta })
        } else {
            Err(MultitaskError::BadWeights { gamma, delta })
        }
    }

    /// DG → 1, QA and MCQA → γ, CoT → δ.
    pub fn weight(&self, task: Task) -> f64 {
        match task {
            Task::Dg => 1.0,
            Task::Qa | Task::Mcqa => self.gamma,
            Task::Cot => self.delta,
        }
    }
}

impl Default for TaskWeights {
    fn default() -> Self {
        Self { gamma: 1.0, delta: 1.0 }
    }
}

/// Per-task mean losses for one step or epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub dg: f64,
    pub qa: f64,
    pub cot: f64,
}

pub fn compose_loss(terms: LossTerms, weights: TaskWeights) -> Result<f64, MultitaskError> {
    for (name, value) in [("psi_dg", terms.dg), ("psi_qa", terms.qa), ("psi_cot", terms.cot)] {
        if !value.is_finite() {
            return Err(MultitaskError::NonFinite { name, value });
        }
    }
    Ok(terms.dg + weights.gamma * terms.qa + weights.delta * terms.cot)
}

/// How tasks are interleaved in the plan stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// One shuffled stream; batches mix tasks and their weighted losses sum.
    #[default]
    Summed,
    /// Tasks take turns (DG, QA, CoT, MCQA, DG, ...), each shuffled
    /// internally; exhausted tasks drop out of the rotation.
    Alternating,
}

impl fmt::Display for MixtureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixtureMode::Summed => "summed",
            MixtureMode::Alternating => "alternating",
        })
    }
}

impl FromStr for MixtureMode {
    type Err = MultitaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summed" => Ok(MixtureMode::Summed),
            "alternating" => Ok(MixtureMode::Alternating),
            _ => Err(MultitaskError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub example_id: String,
    pub task: Task,
    pub weight: f64,
}

/// Minimal view of an example needed for planning; file readers that see a
/// task name they do not know fail while building it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanInput {
    #[serde(alias = "id")]
    pub example_id: String,
    pub task: Task,
}

impl From<&TrainingExample> for PlanInput {
    fn from(ex: &TrainingExample) -> Self {
        Self {
            example_id: ex.id.clone(),
            task: ex.task,
        }
    }
}

impl PlanInput {
    pub fn parse(example_id: impl Into<String>, task: &str) -> Result<Self, MultitaskError> {
        Ok(Self {
            example_id: example_id.into(),
            task: task.parse()?,
        })
    }
}

pub type MixturePlan = Vec<PlanEntry>;

/// Deterministic interleaving of all examples, each appearing exactly once
/// with its task weight.
pub fn plan_mixture(examples: &[PlanInput], weights: TaskWeights, seed: u64, mode: MixtureMode) -> MixturePlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = |ex: &PlanInput| PlanEntry {
        example_id: ex.example_id.clone(),
        task: ex.task,
        weight: weights.weight(ex.task),
    };
    match mode {
        MixtureMode::Summed => {
            let mut plan: Vec<PlanEntry> = examples.iter().map(entry).collect();
            plan.shuffle(&mut rng);
            plan
        }
        MixtureMode::Alternating => {
            let mut queues: BTreeMap<Task, Vec<PlanEntry>> = BTreeMap::new();
            for ex in examples {
                queues.entry(ex.task).or_default().push(entry(ex));
            }
            for q in queues.values_mut() {
                q.shuffle(&mut rng);
                q.reverse();
            }
            let mut plan = Vec::with_capacity(examples.len());
            while !queues.is_empty() {
                queues.retain(|_, q| match q.pop() {
                    Some(e) => {
                        plan.push(e);
                        true
                    }
                    None => false,
                });
            }
            plan
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_examples() {
        let w = TaskWeights::new(1.0, 1.0).unwrap();
        assert_eq!(compose_loss(LossTerms { dg: 2.0, qa: 1.0, cot: 0.5 }, w).unwrap(), 3.5);
        let w = TaskWeights::new(0.5, 0.25).unwrap();
        assert_eq!(compose_loss(LossTerms { dg: 1.0, qa: 2.0, cot: 4.0 }, w).unwrap(), 3.0);
        let zero = TaskWeights::new(0.0, 0.0).unwrap();
        assert_eq!(compose_loss(LossTerms { dg: 1.7, qa: 9.0, cot: 3.0 }, zero).unwrap(), 1.7);
    }

    #[test]
    fn compose_rejects_non_finite() {
        let r = compose_loss(LossTerms { dg: f64::NAN, qa: 0.0, cot: 0.0 }, TaskWeights::default());
        assert!(matches!(r, Err(MultitaskError::NonFinite { name: "psi_dg", .. })));
    }

    #[test]
    fn weights_validated() {
        assert!(TaskWeights::new(-1.0, 0.0).is_err());
        assert!(TaskWeights::new(0.0, f64::INFINITY).is_err());
        assert!(serde_json::from_str::<TaskWeights>(r#"{"gamma":-1,"delta":1}"#).is_err());
    }

    fn inputs(tasks: &[&str]) -> Vec<PlanInput> {
        tasks
            .iter()
            .enumerate()
            .map(|(i, t)| PlanInput::parse(format!("e{i}"), t).unwrap())
            .collect()
    }

    #[test]
    fn dg_only_plan_keeps_membership() {
        let ex = inputs(&["DG", "DG", "DG", "DG"]);
        let plan = plan_mixture(&ex, TaskWeights::new(0.3, 0.7).unwrap(), 5, MixtureMode::Summed);
        let mut ids: Vec<_> = plan.iter().map(|e| e.example_id.clone()).collect();
        ids.sort();
        assert_eq!(ids, ["e0", "e1", "e2", "e3"]);
        assert!(plan.iter().all(|e| e.weight == 1.0));
    }

    #[test]
    fn alternating_rotates_tasks() {
        let ex = inputs(&["DG", "DG", "DG", "QA", "CoT", "MCQA"]);
        let plan = plan_mixture(&ex, TaskWeights::default(), 1, MixtureMode::Alternating);
        let tasks: Vec<_> = plan.iter().map(|e| e.task).collect();
        assert_eq!(tasks, [Task::Dg, Task::Qa, Task::Cot, Task::Mcqa, Task::Dg, Task::Dg]);
    }

    #[test]
    fn unknown_task_is_an_error() {
        assert!(matches!(PlanInput::parse("x", "summary"), Err(MultitaskError::UnknownTask(_))));
        assert!(serde_json::from_str::<PlanInput>(r#"{"id":"x","task":"summary"}"#).is_err());
    }

    #[test]
    fn same_seed_same_plan() {
        let ex = inputs(&["DG", "QA", "CoT", "DG", "MCQA", "DG"]);
        let w = TaskWeights::new(0.5, 2.0).unwrap();
        for mode in [MixtureMode::Summed, MixtureMode::Alternating] {
            assert_eq!(plan_mixture(&ex, w, 9, mode), plan_mixture(&ex, w, 9, mode));
        }
    }
}
