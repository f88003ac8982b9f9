use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bleu_from_stats, meteor_from_stats, order_free_sum, rouge_l_pair, tokenize, MeteorParams, MeteorStats,
    MetricError, NgramStats, Smoothing, DEFAULT_ROUGE_BETA,
};
use crate::corpus::N_DISTRACTORS;
use crate::maskpattern::PERMUTATIONS;
use crate::text::normalize;

/// How predicted distractors are matched to reference distractors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Slot i of the prediction against slot i of the reference.
    #[default]
    Positional,
    /// Per record, the assignment maximizing summed sentence BLEU-4.
    BestMatch,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::Positional => "positional",
            Pairing::BestMatch => "best_match",
        })
    }
}

impl FromStr for Pairing {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positional" => Ok(Pairing::Positional),
            "best_match" | "best-match" => Ok(Pairing::BestMatch),
            _ => Err(MetricError::UnknownPairing(s.to_string())),
        }
    }
}

/// Prediction or reference line: an item id and its distractors. Reads
/// canonical item files too (`id` is accepted for `item_id`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistractorRecord {
    #[serde(alias = "id")]
    pub item_id: String,
    pub distractors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub item_id: String,
    /// `assignment[r]` is the prediction slot paired with reference slot `r`.
    pub assignment: [usize; N_DISTRACTORS],
    /// Sentence-level smoothed BLEU-4 summed over the three pairs.
    pub bleu4_sum: f64,
    pub rouge_l: f64,
    pub meteor: f64,
}

/// Corpus scores on the 0–100 scale, mirroring the usual results-table
/// columns, plus per-record diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub n_pairs: usize,
    pub pairing: Pairing,
    /// Mean over records of the summed sentence BLEU-4 of the chosen
    /// assignment; best-match maximizes this per record.
    pub pairing_objective: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_record: Vec<RecordScore>,
}

impl MetricReport {
    pub fn bleu(&self, n: usize) -> Option<f64> {
        match n {
            1 => Some(self.bleu1),
            2 => Some(self.bleu2),
            3 => Some(self.bleu3),
            4 => Some(self.bleu4),
            _ => None,
        }
    }
}

type Tokens = Vec<String>;

struct Scored {
    ngram: NgramStats,
    meteor: MeteorStats,
    rouge: [f64; N_DISTRACTORS],
    record: RecordScore,
}

fn sentence_b4(c: &Tokens, r: &Tokens) -> f64 {
    bleu_from_stats(&NgramStats::of_pair(c, r), 4, Smoothing::SENTENCE_DEFAULT).expect("order 4 is valid")
}

/// Picks the assignment for one record. Best-match ties are broken by the
/// lexicographically smallest sequence of predicted strings in reference
/// slot order, so the choice does not depend on prediction order.
fn choose(pred: &[Tokens], refs: &[Tokens], pred_text: &[String], pairing: Pairing) -> ([usize; N_DISTRACTORS], f64) {
    let objective = |perm: &[usize; 3]| (0..N_DISTRACTORS).map(|r| sentence_b4(&pred[perm[r]], &refs[r])).sum::<f64>();
    match pairing {
        Pairing::Positional => ([0, 1, 2], objective(&[0, 1, 2])),
        Pairing::BestMatch => {
            let mut best: Option<([usize; 3], f64)> = None;
            for perm in PERMUTATIONS {
                let score = objective(&perm);
                let better = match &best {
                    None => true,
                    Some((bp, bs)) => {
                        score > *bs
                            || (score == *bs && perm.map(|i| &pred_text[i]) < bp.map(|i| &pred_text[i]))
                    }
                };
                if better {
                    best = Some((perm, score));
                }
            }
            best.expect("six permutations")
        }
    }
}

fn score_record(item_id: &str, pred: &[String], refs: &[String], pairing: Pairing) -> Scored {
    let pred_text: Vec<String> = pred.iter().map(|s| normalize(s)).collect();
    let ref_text: Vec<String> = refs.iter().map(|s| normalize(s)).collect();
    let pred_tok: Vec<Tokens> = pred_text.iter().map(|s| tokenize(s).0).collect();
    let ref_tok: Vec<Tokens> = ref_text.iter().map(|s| tokenize(s).0).collect();

    let (assignment, objective) = choose(&pred_tok, &ref_tok, &pred_text, pairing);
    let mut ngram = NgramStats::default();
    let mut meteor = MeteorStats::default();
    let mut rouge = [0.0; N_DISTRACTORS];
    let mut sentence_meteor = 0.0;
    for r in 0..N_DISTRACTORS {
        let c = &pred_tok[assignment[r]];
        ngram += NgramStats::of_pair(c, &ref_tok[r]);
        let m = MeteorStats::of_pair(c, &ref_tok[r]);
        sentence_meteor += meteor_from_stats(&m, MeteorParams::default());
        meteor += m;
        rouge[r] = rouge_l_pair(c, &ref_tok[r], DEFAULT_ROUGE_BETA);
    }
    Scored {
        ngram,
        meteor,
        rouge,
        record: RecordScore {
            item_id: item_id.to_string(),
            assignment,
            bleu4_sum: objective,
            rouge_l: 100.0 * rouge.iter().sum::<f64>() / N_DISTRACTORS as f64,
            meteor: sentence_meteor / N_DISTRACTORS as f64,
        },
    }
}

/// Scores predicted distractor triples against references joined by item
/// id. Every prediction needs a reference; extra references are ignored.
pub fn score_run(
    predictions: &[DistractorRecord],
    references: &[DistractorRecord],
    pairing: Pairing,
) -> Result<MetricReport, MetricError> {
    if predictions.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let by_id: HashMap<&str, &DistractorRecord> = references.iter().map(|r| (r.item_id.as_str(), r)).collect();
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(predictions.len());
    for p in predictions {
        if !seen.insert(p.item_id.as_str()) {
            return Err(MetricError::DuplicatePrediction(p.item_id.clone()));
        }
        let r = by_id
            .get(p.item_id.as_str())
            .ok_or_else(|| MetricError::MissingReference(p.item_id.clone()))?;
        if p.distractors.len() != N_DISTRACTORS || r.distractors.len() != N_DISTRACTORS {
            return Err(MetricError::DistractorCount {
                item_id: p.item_id.clone(),
                predicted: p.distractors.len(),
                reference: r.distractors.len(),
            });
        }
        pairs.push((p, *r));
    }

    let scored: Vec<Scored> = pairs
        .par_iter()
        .map(|(p, r)| score_record(&p.item_id, &p.distractors, &r.distractors, pairing))
        .collect();

    let mut ngram = NgramStats::default();
    let mut meteor = MeteorStats::default();
    let mut rouge = Vec::with_capacity(scored.len() * N_DISTRACTORS);
    let mut objective = Vec::with_capacity(scored.len());
    for s in &scored {
        ngram += s.ngram;
        meteor += s.meteor;
        rouge.extend_from_slice(&s.rouge);
        objective.push(s.record.bleu4_sum);
    }
    let n_pairs = rouge.len();
    let bleu = |n| bleu_from_stats(&ngram, n, Smoothing::None).expect("orders 1..=4 are valid");
    Ok(MetricReport {
        bleu1: bleu(1),
        bleu2: bleu(2),
        bleu3: bleu(3),
        bleu4: bleu(4),
        meteor: meteor_from_stats(&meteor, MeteorParams::default()),
        rouge_l: 100.0 * order_free_sum(rouge) / n_pairs as f64,
        n_pairs,
        pairing,
        pairing_objective: order_free_sum(objective) / scored.len() as f64,
        per_record: scored.into_iter().map(|s| s.record).collect(),
    })
}
