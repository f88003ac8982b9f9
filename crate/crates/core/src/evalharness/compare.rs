use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::jsonl;
use crate::metrics::{score_run, DistractorRecord, MetricReport, Pairing};

/// Metric keys a run can be compared on.
pub const METRICS: [&str; 6] = ["bleu1", "bleu2", "bleu3", "bleu4", "meteor", "rouge_l"];

/// One evaluated system. Exactly one of `predictions`, `scores` or
/// `score_file` supplies its numbers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    #[serde(default)]
    pub model_label: Option<String>,
    /// Free-form configuration tags such as `ft2,e2e`.
    #[serde(default)]
    pub tags: Option<String>,
    #[serde(default)]
    pub predictions: Option<PathBuf>,
    /// Reference file for this run; falls back to the set-level reference.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Precomputed metric values, e.g. `{"bleu4": 22.64}`.
    #[serde(default)]
    pub scores: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub score_file: Option<PathBuf>,
}

/// Contents of a `compare --runs` manifest file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSet {
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub pairing: Pairing,
    pub runs: Vec<RunManifest>,
    #[serde(default)]
    pub assertions: Vec<String>,
}

impl RunSet {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.to_path_buf(), e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json(path.to_path_buf(), e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub run_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<String>,
    pub scores: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<MetricReport>,
}

pub fn report_scores(r: &MetricReport) -> BTreeMap<String, f64> {
    [
        ("bleu1", r.bleu1),
        ("bleu2", r.bleu2),
        ("bleu3", r.bleu3),
        ("bleu4", r.bleu4),
        ("meteor", r.meteor),
        ("rouge_l", r.rouge_l),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
}

impl CmpOp {
    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "==",
        }
    }
}

/// A check over the comparison table.
///
/// Grammar, whitespace-insensitive:
///
/// ```text
/// <metric>_ratio[(<num_run>/<den_run>)] <op> <number>
/// <metric>_increasing | <metric>_decreasing
/// ```
///
/// Without explicit runs a ratio is last run over first run. `increasing`
/// means strictly increasing in manifest order.
#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    Ratio {
        metric: String,
        runs: Option<(String, String)>,
        op: CmpOp,
        threshold: f64,
    },
    Monotone {
        metric: String,
        increasing: bool,
    },
}

fn known_metric(m: &str, expr: &str) -> Result<String, HarnessError> {
    if METRICS.contains(&m) {
        Ok(m.to_string())
    } else {
        Err(HarnessError::Assertion {
            expr: expr.to_string(),
            reason: format!("unknown metric `{m}`"),
        })
    }
}

impl FromStr for Assertion {
    type Err = HarnessError;

    fn from_str(expr: &str) -> Result<Self, Self::Err> {
        let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |reason: &str| HarnessError::Assertion {
            expr: expr.to_string(),
            reason: reason.to_string(),
        };
        for (suffix, increasing) in [("_increasing", true), ("_decreasing", false)] {
            if let Some(m) = s.strip_suffix(suffix) {
                return Ok(Assertion::Monotone {
                    metric: known_metric(m, expr)?,
                    increasing,
                });
            }
        }
        let (lhs, op, rhs) = [(">=", CmpOp::Ge), ("<=", CmpOp::Le), ("==", CmpOp::Eq), (">", CmpOp::Gt), ("<", CmpOp::Lt)]
            .into_iter()
            .find_map(|(sym, op)| s.split_once(sym).map(|(l, r)| (l, op, r)))
            .ok_or_else(|| bad("expected a comparison operator"))?;
        let threshold: f64 = rhs.parse().map_err(|_| bad("threshold is not a number"))?;
        let (metric, runs) = match lhs.split_once("_ratio") {
            Some((m, "")) => (m, None),
            Some((m, rest)) => {
                let inner = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| bad("expected `(<run>/<run>)` after `_ratio`"))?;
                let (a, b) = inner.split_once('/').ok_or_else(|| bad("expected `<run>/<run>`"))?;
                if a.is_empty() || b.is_empty() {
                    return Err(bad("empty run id"));
                }
                (m, Some((a.to_string(), b.to_string())))
            }
            None => return Err(bad("left side must be `<metric>_ratio`")),
        };
        Ok(Assertion::Ratio {
            metric: known_metric(metric, expr)?,
            runs,
            op,
            threshold,
        })
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Ratio {
                metric,
                runs,
                op,
                threshold,
            } => {
                write!(f, "{metric}_ratio")?;
                if let Some((a, b)) = runs {
                    write!(f, "({a}/{b})")?;
                }
                write!(f, "{}{threshold}", op.symbol())
            }
            Assertion::Monotone { metric, increasing } => {
                write!(f, "{metric}_{}", if *increasing { "increasing" } else { "decreasing" })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub assertion: String,
    pub passed: bool,
    /// Observed ratio for ratio assertions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    pub detail: String,
}

/// Per-run scores, pairwise ratio tables and assertion outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub runs: Vec<RunScores>,
    /// `ratios[metric][i][j]` is run i over run j; `None` when run j scored
    /// zero or lacks the metric.
    pub ratios: BTreeMap<String, Vec<Vec<Option<f64>>>>,
    pub assertions: Vec<AssertionOutcome>,
}

impl Comparison {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    fn index(&self, run_id: &str) -> Option<usize> {
        self.runs.iter().position(|r| r.run_id == run_id)
    }

    pub fn ratio(&self, metric: &str, num: &str, den: &str) -> Option<f64> {
        let (i, j) = (self.index(num)?, self.index(den)?);
        self.ratios.get(metric)?[i][j]
    }
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

fn evaluate(a: &Assertion, table: &Comparison) -> Result<AssertionOutcome, HarnessError> {
    let unknown_run = |id: &str| HarnessError::Assertion {
        expr: a.to_string(),
        reason: format!("unknown run `{id}`"),
    };
    Ok(match a {
        Assertion::Ratio {
            metric,
            runs,
            op,
            threshold,
        } => {
            let (num, den) = match runs {
                Some((n, d)) => (
                    table.index(n).ok_or_else(|| unknown_run(n))?,
                    table.index(d).ok_or_else(|| unknown_run(d))?,
                ),
                None => (table.runs.len() - 1, 0),
            };
            let observed = table.ratios.get(metric).and_then(|m| m[num][den]);
            let passed = observed.is_some_and(|r| op.holds(r, *threshold));
            AssertionOutcome {
                assertion: a.to_string(),
                passed,
                observed,
                detail: match observed {
                    Some(r) => format!(
                        "{}/{} = {r:.4} {} {threshold}",
                        table.runs[num].run_id,
                        table.runs[den].run_id,
                        op.symbol()
                    ),
                    None => format!("{metric} ratio undefined (missing or zero score)"),
                },
            }
        }
        Assertion::Monotone { metric, increasing } => {
            let values: Vec<Option<f64>> = table.runs.iter().map(|r| r.scores.get(metric).copied()).collect();
            let passed = values.iter().all(Option::is_some)
                && values.windows(2).all(|w| {
                    let (x, y) = (w[0].unwrap(), w[1].unwrap());
                    if *increasing {
                        x < y
                    } else {
                        x > y
                    }
                });
            let shown: Vec<String> = values
                .iter()
                .map(|v| v.map_or_else(|| "-".to_string(), |v| format!("{v}")))
                .collect();
            AssertionOutcome {
                assertion: a.to_string(),
                passed,
                observed: None,
                detail: shown.join(if *increasing { " < " } else { " > " }),
            }
        }
    })
}

/// Builds the comparison table from already-known scores.
pub fn compare_scores(runs: Vec<RunScores>, assertions: &[Assertion]) -> Result<Comparison, HarnessError> {
    if runs.len() < 2 {
        return Err(HarnessError::TooFewRuns(runs.len()));
    }
    let mut seen = HashSet::new();
    for r in &runs {
        if !seen.insert(r.run_id.as_str()) {
            return Err(HarnessError::DuplicateRun(r.run_id.clone()));
        }
    }
    let mut ratios = BTreeMap::new();
    for m in METRICS {
        if runs.iter().all(|r| !r.scores.contains_key(m)) {
            continue;
        }
        let table: Vec<Vec<Option<f64>>> = runs
            .iter()
            .map(|a| {
                runs.iter()
                    .map(|b| ratio(a.scores.get(m).copied(), b.scores.get(m).copied()))
                    .collect()
            })
            .collect();
        ratios.insert(m.to_string(), table);
    }
    let mut cmp = Comparison {
        runs,
        ratios,
        assertions: Vec::new(),
    };
    cmp.assertions = assertions.iter().map(|a| evaluate(a, &cmp)).collect::<Result<_, _>>()?;
    Ok(cmp)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_run(run: &RunManifest, set: &RunSet, base: &Path) -> Result<RunScores, HarnessError> {
    let sources = [run.predictions.is_some(), run.scores.is_some(), run.score_file.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(HarnessError::RunSource(run.run_id.clone()));
    }
    let (scores, report) = if let Some(s) = &run.scores {
        (s.clone(), None)
    } else if let Some(f) = &run.score_file {
        let path = resolve(base, f);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::RunFile {
            run_id: run.run_id.clone(),
            path: path.clone(),
            source: e,
        })?;
        let scores = serde_json::from_str(&text).map_err(|e| HarnessError::Json(path, e))?;
        (scores, None)
    } else {
        let pred_path = resolve(base, run.predictions.as_ref().expect("checked above"));
        let ref_path = run
            .reference
            .as_ref()
            .or(set.reference.as_ref())
            .map(|p| resolve(base, p))
            .ok_or_else(|| HarnessError::NoReference(run.run_id.clone()))?;
        let read = |path: &Path| -> Result<Vec<DistractorRecord>, HarnessError> {
            let file = std::fs::File::open(path).map_err(|e| HarnessError::RunFile {
                run_id: run.run_id.clone(),
                path: path.to_path_buf(),
                source: e,
            })?;
            jsonl::read(std::io::BufReader::new(file)).map_err(|e| HarnessError::Records(path.to_path_buf(), e))
        };
        let preds = read(&pred_path)?;
        let refs = read(&ref_path)?;
        let report = score_run(&preds, &refs, set.pairing).map_err(|e| HarnessError::Metric {
            run_id: run.run_id.clone(),
            source: e,
        })?;
        (report_scores(&report), Some(report))
    };
    if let Some(k) = scores.keys().find(|k| !METRICS.contains(&k.as_str())) {
        return Err(HarnessError::UnknownMetric {
            run_id: run.run_id.clone(),
            metric: k.clone(),
        });
    }
    Ok(RunScores {
        run_id: run.run_id.clone(),
        model_label: run.model_label.clone(),
        tags: run.tags.clone(),
        scores,
        report,
    })
}

/// Scores every run of `set` (in parallel) and evaluates the assertions.
/// Relative paths resolve against `base`.
pub fn compare_runs(set: &RunSet, base: &Path, assertions: &[Assertion]) -> Result<Comparison, HarnessError> {
    if set.runs.len() < 2 {
        return Err(HarnessError::TooFewRuns(set.runs.len()));
    }
    let runs = set
        .runs
        .par_iter()
        .map(|r| load_run(r, set, base))
        .collect::<Result<Vec<_>, _>>()?;
    compare_scores(runs, assertions)
}
