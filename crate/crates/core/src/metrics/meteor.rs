use std::collections::HashMap;
use std::hash::Hash;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::{check_parallel, MetricError};

/// METEOR weights: `Fmean = P·R / (α·P + (1−α)·R)`,
/// `penalty = γ·(chunks/matches)^β`, `score = Fmean·(1 − penalty)`.
/// Defaults are the original Banerjee–Lavie constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Search nodes explored before settling for the best alignment found.
const SEARCH_BUDGET: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
    /// False when the search budget ran out; `chunks` is then an upper bound.
    pub exact: bool,
}

struct Search<'a> {
    cand: &'a [u32],
    refs_of: Vec<Vec<usize>>,
    used: Vec<bool>,
    skips_left: Vec<usize>,
    best: usize,
    nodes: usize,
}

impl Search<'_> {
    /// `prev` is the reference position matched by candidate `i − 1`.
    fn go(&mut self, i: usize, prev: Option<usize>, chunks: usize) {
        if chunks >= self.best {
            return;
        }
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET && self.best != usize::MAX {
            return;
        }
        if i == self.cand.len() {
            self.best = chunks;
            return;
        }
        let ty = self.cand[i] as usize;
        // continuing the current chunk first finds good bounds early
        if let Some(j) = prev.map(|p| p + 1) {
            if j < self.used.len() && !self.used[j] && self.refs_of[ty].contains(&j) {
                self.used[j] = true;
                self.go(i + 1, Some(j), chunks);
                self.used[j] = false;
            }
        }
        for k in 0..self.refs_of[ty].len() {
            let j = self.refs_of[ty][k];
            if self.used[j] || prev.map(|p| p + 1) == Some(j) {
                continue;
            }
            self.used[j] = true;
            self.go(i + 1, Some(j), chunks + 1);
            self.used[j] = false;
        }
        if self.skips_left[ty] > 0 {
            self.skips_left[ty] -= 1;
            self.go(i + 1, None, chunks);
            self.skips_left[ty] += 1;
        }
    }
}

/// Exact-match unigram alignment with the maximum number of matches and,
/// among those, the fewest chunks. A chunk is a run of matches that are
/// adjacent and in the same order in both strings.
pub fn align<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Alignment {
    let mut ids: HashMap<&T, u32> = HashMap::new();
    let mut intern = |t| {
        let next = ids.len() as u32;
        *ids.entry(t).or_insert(next)
    };
    let cand: Vec<u32> = candidate.iter().map(&mut intern).collect();
    let refs: Vec<u32> = reference.iter().map(&mut intern).collect();
    let n_types = ids.len();

    let mut refs_of = vec![Vec::new(); n_types];
    for (j, &t) in refs.iter().enumerate() {
        refs_of[t as usize].push(j);
    }
    let mut cand_count = vec![0usize; n_types];
    for &t in &cand {
        cand_count[t as usize] += 1;
    }
    // every type must reach min(count_c, count_r) matches; the surplus of
    // candidate occurrences is the number that may stay unmatched
    let skips_left: Vec<usize> = (0..n_types)
        .map(|t| cand_count[t].saturating_sub(refs_of[t].len()))
        .collect();
    let matches = (0..n_types).map(|t| cand_count[t].min(refs_of[t].len())).sum();
    if matches == 0 {
        return Alignment {
            matches: 0,
            chunks: 0,
            exact: true,
        };
    }

    let mut search = Search {
        cand: &cand,
        refs_of,
        used: vec![false; refs.len()],
        skips_left,
        best: usize::MAX,
        nodes: 0,
    };
    search.go(0, None, 0);
    Alignment {
        matches,
        chunks: search.best,
        exact: search.nodes <= SEARCH_BUDGET,
    }
}

/// Integer sufficient statistics for METEOR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeteorStats {
    pub matches: u64,
    pub chunks: u64,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl AddAssign for MeteorStats {
    fn add_assign(&mut self, o: Self) {
        self.matches += o.matches;
        self.chunks += o.chunks;
        self.candidate_len += o.candidate_len;
        self.reference_len += o.reference_len;
    }
}

impl MeteorStats {
    pub fn of_pair<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Self {
        let a = align(candidate, reference);
        Self {
            matches: a.matches as u64,
            chunks: a.chunks as u64,
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
        }
    }
}

/// METEOR on the 0–100 scale from accumulated statistics.
pub fn meteor_from_stats(s: &MeteorStats, params: MeteorParams) -> f64 {
    if s.matches == 0 {
        return 0.0;
    }
    let m = s.matches as f64;
    let p = m / s.candidate_len as f64;
    let r = m / s.reference_len as f64;
    let fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let penalty = params.gamma * (s.chunks as f64 / m).powf(params.beta);
    (100.0 * fmean * (1.0 - penalty)).clamp(0.0, 100.0)
}

/// Corpus METEOR: statistics are summed over pairs before scoring.
pub fn meteor<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], params: MeteorParams) -> Result<f64, MetricError> {
    check_parallel(candidates, references)?;
    let mut stats = MeteorStats::default();
    for (c, r) in candidates.iter().zip(references) {
        stats += MeteorStats::of_pair(c, r);
    }
    Ok(meteor_from_stats(&stats, params))
}
