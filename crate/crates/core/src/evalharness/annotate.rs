use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{LengthBucket, McqItem};
use crate::jsonl;
use crate::metrics::DistractorRecord;

/// A rating on the 1 (poor) to 5 (excellent) scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Score(u8);

impl Score {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Score {
    type Error = HarnessError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        if (Self::MIN..=Self::MAX).contains(&v) {
            Ok(Score(v))
        } else {
            Err(HarnessError::ScoreRange(v.into()))
        }
    }
}

impl From<Score> for u8 {
    fn from(s: Score) -> u8 {
        s.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub rater_id: String,
    /// System whose distractors were rated; empty for ground truth.
    #[serde(default)]
    pub model: String,
    pub relevance: Score,
    pub complexity: Score,
    pub length_bucket: LengthBucket,
}

/// What a rater sees for one item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub item_id: String,
    pub context: String,
    pub question: String,
    pub answer: String,
    pub distractors: Vec<String>,
    pub length_bucket: LengthBucket,
}

/// Pairs items with the distractors to be rated. Without predictions the
/// items' own distractors are shown; with predictions, every prediction
/// must name a known item and only predicted items are returned.
pub fn tasks_from(items: &[McqItem], predictions: Option<&[DistractorRecord]>) -> Result<Vec<AnnotationTask>, HarnessError> {
    let task = |item: &McqItem, distractors: Vec<String>| AnnotationTask {
        item_id: item.id.clone(),
        context: item.context.clone(),
        question: item.question.clone(),
        answer: item.answer.clone(),
        distractors,
        length_bucket: LengthBucket::of_text(&item.context),
    };
    match predictions {
        None => Ok(items.iter().map(|i| task(i, i.distractors.to_vec())).collect()),
        Some(preds) => {
            let by_id: HashMap<&str, &McqItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
            preds
                .iter()
                .map(|p| {
                    let item = by_id
                        .get(p.item_id.as_str())
                        .ok_or_else(|| HarnessError::UnknownItem(p.item_id.clone()))?;
                    Ok(task(item, p.distractors.clone()))
                })
                .collect()
        }
    }
}

/// Items drawn per length bucket, in short, medium, long order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec(pub [usize; 3]);

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec([100, 100, 100])
    }
}

impl FromStr for SampleSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || HarnessError::SampleSpec(s.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut out = [0usize; 3];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = p.parse().map_err(|_| bad())?;
        }
        Ok(SampleSpec(out))
    }
}

impl fmt::Display for SampleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Seeded sampling without replacement inside each bucket, followed by a
/// seeded shuffle of the whole session. The result depends only on the set
/// of tasks, not on their input order.
pub fn sample_tasks(tasks: &[AnnotationTask], spec: SampleSpec, seed: u64) -> Result<Vec<AnnotationTask>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_bucket: BTreeMap<LengthBucket, Vec<&AnnotationTask>> = BTreeMap::new();
    for t in tasks {
        by_bucket.entry(t.length_bucket).or_default().push(t);
    }
    let mut out = Vec::with_capacity(spec.0.iter().sum());
    for (bucket, &wanted) in LengthBucket::ALL.iter().zip(&spec.0) {
        let mut pool = by_bucket.remove(bucket).unwrap_or_default();
        if pool.len() < wanted {
            return Err(HarnessError::BucketTooSmall {
                bucket: *bucket,
                wanted,
                available: pool.len(),
            });
        }
        pool.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        pool.shuffle(&mut rng);
        out.extend(pool.into_iter().take(wanted).cloned());
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Reads a session file; a missing file is an empty session.
pub fn load_session(path: &Path) -> Result<Vec<AnnotationRecord>, HarnessError> {
    match std::fs::File::open(path) {
        Ok(f) => jsonl::read(std::io::BufReader::new(f)).map_err(|e| HarnessError::Records(path.to_path_buf(), e)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(HarnessError::Io(path.to_path_buf(), e)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotateOutcome {
    /// Records collected in this call, in prompt order.
    pub records: Vec<AnnotationRecord>,
    /// Items skipped because the session already rated them.
    pub resumed: usize,
    /// False when input ended (or the rater quit) before the last item.
    pub completed: bool,
}

fn parse_scores(line: &str) -> Option<(Score, Score)> {
    let nums: Vec<&str> = line
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .collect();
    match nums.as_slice() {
        [r, c] => Some((
            Score::try_from(r.parse::<u8>().ok()?).ok()?,
            Score::try_from(c.parse::<u8>().ok()?).ok()?,
        )),
        _ => None,
    }
}

fn show(out: &mut impl Write, pos: usize, total: usize, t: &AnnotationTask) -> std::io::Result<()> {
    writeln!(out, "\n[{pos}/{total}] {} ({:?})", t.item_id, t.length_bucket)?;
    writeln!(out, "文章: {}", t.context)?;
    writeln!(out, "问题: {}", t.question)?;
    writeln!(out, "答案: {}", t.answer)?;
    for (k, d) in t.distractors.iter().enumerate() {
        writeln!(out, "干扰项{}: {d}", k + 1)?;
    }
    Ok(())
}

/// Interactive rating loop. Each pending task is shown on `out`, then one
/// line with two integers (relevance, complexity) in 1..=5 is read from
/// `input`; anything else re-prompts. Every accepted record is appended to
/// `session` and flushed at once, so an interrupted session loses nothing.
/// Tasks whose id is in `done` are skipped. `q` or end of input stops early.
pub fn annotate(
    tasks: &[AnnotationTask],
    rater_id: &str,
    model: &str,
    done: &HashSet<String>,
    mut input: impl BufRead,
    mut out: impl Write,
    mut session: impl Write,
) -> Result<AnnotateOutcome, HarnessError> {
    let io = |e| HarnessError::Io("<session>".into(), e);
    let pending: Vec<&AnnotationTask> = tasks.iter().filter(|t| !done.contains(&t.item_id)).collect();
    let resumed = tasks.len() - pending.len();
    let mut records = Vec::with_capacity(pending.len());
    for (k, t) in pending.iter().enumerate() {
        show(&mut out, resumed + k + 1, tasks.len(), t).map_err(io)?;
        let (relevance, complexity) = loop {
            write!(out, "relevance complexity (1-5, q to stop)> ").map_err(io)?;
            out.flush().map_err(io)?;
            let mut line = String::new();
            let eof = input.read_line(&mut line).map_err(io)? == 0;
            let line = line.trim();
            if eof || line == "q" || line == "quit" {
                writeln!(out, "\nsession saved after {} of {} items", resumed + k, tasks.len()).map_err(io)?;
                return Ok(AnnotateOutcome {
                    records,
                    resumed,
                    completed: false,
                });
            }
            match parse_scores(line) {
                Some(s) => break s,
                None => writeln!(out, "need two integers between 1 and 5, e.g. `4 3`").map_err(io)?,
            }
        };
        let rec = AnnotationRecord {
            item_id: t.item_id.clone(),
            rater_id: rater_id.to_string(),
            model: model.to_string(),
            relevance,
            complexity,
            length_bucket: t.length_bucket,
        };
        serde_json::to_writer(&mut session, &rec).map_err(|e| HarnessError::Io("<session>".into(), e.into()))?;
        session.write_all(b"\n").map_err(io)?;
        session.flush().map_err(io)?;
        records.push(rec);
    }
    Ok(AnnotateOutcome {
        records,
        resumed,
        completed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str, len: usize) -> AnnotationTask {
        AnnotationTask {
            item_id: id.into(),
            context: "文".repeat(len),
            question: "问".into(),
            answer: "答".into(),
            distractors: vec!["甲".into(), "乙".into(), "丙".into()],
            length_bucket: LengthBucket::from_tokens(len),
        }
    }

    #[test]
    fn scripted_session_persists_in_order() {
        let tasks = [task("a", 10), task("b", 10), task("c", 10)];
        let mut sink = Vec::new();
        let mut screen = Vec::new();
        let input = "5 3\n9 9\nbad\n4,2\n1 1\n";
        let o = annotate(&tasks, "r1", "m", &HashSet::new(), input.as_bytes(), &mut screen, &mut sink).unwrap();
        assert!(o.completed);
        let got: Vec<(String, u8, u8)> = o
            .records
            .iter()
            .map(|r| (r.item_id.clone(), r.relevance.get(), r.complexity.get()))
            .collect();
        assert_eq!(got, [("a".into(), 5, 3), ("b".into(), 4, 2), ("c".into(), 1, 1)]);
        let persisted: Vec<AnnotationRecord> = jsonl::read(sink.as_slice()).unwrap();
        assert_eq!(persisted, o.records);
        assert_eq!(String::from_utf8(screen).unwrap().matches("need two integers").count(), 2);
    }

    #[test]
    fn eof_keeps_partial_and_resume_asks_once() {
        let tasks = [task("a", 10), task("b", 10), task("c", 10)];
        let mut sink = Vec::new();
        let o = annotate(&tasks, "r", "", &HashSet::new(), "2 2\n3 3\n".as_bytes(), std::io::sink(), &mut sink).unwrap();
        assert!(!o.completed);
        assert_eq!(o.records.len(), 2);
        let done: HashSet<String> = o.records.iter().map(|r| r.item_id.clone()).collect();
        let mut screen = Vec::new();
        let o2 = annotate(&tasks, "r", "", &done, "4 4\n".as_bytes(), &mut screen, &mut sink).unwrap();
        assert!(o2.completed);
        assert_eq!(o2.resumed, 2);
        assert_eq!(o2.records.len(), 1);
        assert_eq!(String::from_utf8(screen).unwrap().matches("relevance complexity").count(), 1);
        assert_eq!(jsonl::read::<AnnotationRecord>(sink.as_slice()).unwrap().len(), 3);
    }

    #[test]
    fn sampling_is_seeded_and_bucketed() {
        let tasks: Vec<_> = (0..30).map(|i| task(&format!("t{i:02}"), [10, 100, 300][i % 3])).collect();
        let a = sample_tasks(&tasks, SampleSpec([2, 3, 4]), 7).unwrap();
        let mut rev = tasks.clone();
        rev.reverse();
        let b = sample_tasks(&rev, SampleSpec([2, 3, 4]), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert_eq!(a.iter().filter(|t| t.length_bucket == LengthBucket::Long).count(), 4);
        let ids: HashSet<_> = a.iter().map(|t| &t.item_id).collect();
        assert_eq!(ids.len(), 9);
        assert!(matches!(
            sample_tasks(&tasks, SampleSpec([11, 0, 0]), 7),
            Err(HarnessError::BucketTooSmall { wanted: 11, available: 10, .. })
        ));
    }

    #[test]
    fn score_range_is_enforced_on_read() {
        let line = r#"{"item_id":"a","rater_id":"r","relevance":6,"complexity":1,"length_bucket":"short"}"#;
        assert!(serde_json::from_str::<AnnotationRecord>(line).is_err());
        assert_eq!("100,100,100".parse::<SampleSpec>().unwrap(), SampleSpec::default());
        assert!("1,2".parse::<SampleSpec>().is_err());
    }
}
