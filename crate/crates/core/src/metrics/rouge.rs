use super::{check_parallel, order_free_sum, MetricError};

/// Recall weight of the ROUGE-L F-measure.
pub const DEFAULT_ROUGE_BETA: f64 = 1.2;

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS F-measure of one pair in [0, 1]. Two empty strings score 1.
pub fn rouge_l_pair<T: PartialEq>(candidate: &[T], reference: &[T], beta: f64) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    let b2 = beta * beta;
    ((1.0 + b2) * p * r / (r + b2 * p)).min(1.0)
}

/// Mean pair F-measure on the 0–100 scale.
pub fn rouge_l<T: PartialEq>(candidates: &[Vec<T>], references: &[Vec<T>], beta: f64) -> Result<f64, MetricError> {
    check_parallel(candidates, references)?;
    let scores = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_l_pair(c, r, beta))
        .collect();
    Ok(100.0 * order_free_sum(scores) / candidates.len() as f64)
}
