//! Exhaustive-enumeration scorers. Exponential in string length; only for
//! short test strings.

use std::collections::HashMap;

pub const EPS: f64 = 0.1;

/// Whitespace-collapsed characters. The golden strings are already NFC.
pub fn chars(s: &str) -> Vec<char> {
    s.split_whitespace().collect::<Vec<_>>().join(" ").chars().collect()
}

fn count_grams(t: &[char], n: usize) -> HashMap<Vec<char>, u64> {
    let mut m = HashMap::new();
    let mut i = 0;
    while i + n <= t.len() {
        *m.entry(t[i..i + n].to_vec()).or_insert(0) += 1;
        i += 1;
    }
    m
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Counts {
    pub matches: [u64; 4],
    pub totals: [u64; 4],
    pub c: u64,
    pub r: u64,
}

pub fn counts(c: &[char], r: &[char]) -> Counts {
    let mut out = Counts {
        c: c.len() as u64,
        r: r.len() as u64,
        ..Default::default()
    };
    for n in 1..=4 {
        let (cg, rg) = (count_grams(c, n), count_grams(r, n));
        out.totals[n - 1] = cg.values().sum();
        out.matches[n - 1] = cg.iter().map(|(g, &k)| k.min(*rg.get(g).unwrap_or(&0))).sum();
    }
    out
}

pub fn bleu(k: &Counts, n: usize, eps: Option<f64>) -> f64 {
    if k.c == 0 {
        return if k.r == 0 { 100.0 } else { 0.0 };
    }
    let mut logs = Vec::new();
    for i in 0..n {
        if k.totals[i] == 0 {
            continue;
        }
        let m = match (k.matches[i], eps) {
            (0, None) => return 0.0,
            (0, Some(e)) => e,
            (m, _) => m as f64,
        };
        logs.push((m / k.totals[i] as f64).ln());
    }
    let bp = if k.c >= k.r { 1.0 } else { (1.0 - k.r as f64 / k.c as f64).exp() };
    (100.0 * bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()).clamp(0.0, 100.0)
}

fn is_subsequence(s: &[char], t: &[char]) -> bool {
    let mut it = t.iter();
    s.iter().all(|x| it.any(|y| y == x))
}

/// Longest common subsequence by trying every subsequence of the shorter.
pub fn lcs(a: &[char], b: &[char]) -> usize {
    let (s, l) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(s.len() <= 20, "oracle LCS is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << s.len()) {
        let ones = mask.count_ones() as usize;
        if ones <= best {
            continue;
        }
        let sub: Vec<char> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
        if is_subsequence(&sub, l) {
            best = ones;
        }
    }
    best
}

pub fn rouge(c: &[char], r: &[char]) -> f64 {
    if c.is_empty() && r.is_empty() {
        return 1.0;
    }
    let l = lcs(c, r);
    if l == 0 {
        return 0.0;
    }
    let (p, rc) = (l as f64 / c.len() as f64, l as f64 / r.len() as f64);
    let b2 = 1.2f64 * 1.2;
    ((1.0 + b2) * p * rc / (rc + b2 * p)).min(1.0)
}

fn chunk_count(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    1 + pairs.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count()
}

/// (matches, chunks) of the best alignment over every partial matching.
pub fn alignment(c: &[char], r: &[char]) -> (usize, usize) {
    fn walk(c: &[char], r: &[char], i: usize, used: &mut Vec<bool>, acc: &mut Vec<(usize, usize)>, best: &mut (usize, usize)) {
        if i == c.len() {
            let cand = (acc.len(), chunk_count(acc));
            if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                *best = cand;
            }
            return;
        }
        walk(c, r, i + 1, used, acc, best);
        for j in 0..r.len() {
            if !used[j] && r[j] == c[i] {
                used[j] = true;
                acc.push((i, j));
                walk(c, r, i + 1, used, acc, best);
                acc.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0);
    walk(c, r, 0, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
    best
}

pub fn meteor(m: usize, ch: usize, cl: usize, rl: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let (p, r) = (m as f64 / cl as f64, m as f64 / rl as f64);
    let f = p * r / (0.9 * p + 0.1 * r);
    (100.0 * f * (1.0 - 0.5 * (ch as f64 / m as f64).powi(3))).clamp(0.0, 100.0)
}

#[derive(Debug)]
pub struct OracleReport {
    pub bleu: [f64; 4],
    pub meteor: f64,
    pub rouge_l: f64,
    pub objective: f64,
    pub assignments: Vec<[usize; 3]>,
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Scores parallel lists of (already normalized) distractor triples.
pub fn score(preds: &[[String; 3]], refs: &[[String; 3]], best_match: bool) -> OracleReport {
    let mut total = Counts::default();
    let (mut mm, mut mch, mut mcl, mut mrl) = (0, 0, 0, 0);
    let mut rouges = Vec::new();
    let mut objectives = Vec::new();
    let mut assignments = Vec::new();
    for (p, r) in preds.iter().zip(refs) {
        let pc: Vec<Vec<char>> = p.iter().map(|s| chars(s)).collect();
        let rc: Vec<Vec<char>> = r.iter().map(|s| chars(s)).collect();
        let perms: &[[usize; 3]] = if best_match { &PERMS } else { &PERMS[..1] };
        let obj = |perm: &[usize; 3]| (0..3).map(|k| bleu(&counts(&pc[perm[k]], &rc[k]), 4, Some(EPS))).sum::<f64>();
        let top = perms.iter().map(obj).fold(f64::NEG_INFINITY, f64::max);
        let chosen = *perms
            .iter()
            .filter(|perm| obj(perm) == top)
            .min_by_key(|perm| perm.map(|i| chars(&p[i]).into_iter().collect::<String>()))
            .unwrap();
        objectives.push(top);
        assignments.push(chosen);
        for k in 0..3 {
            let (c, rr) = (&pc[chosen[k]], &rc[k]);
            let x = counts(c, rr);
            for i in 0..4 {
                total.matches[i] += x.matches[i];
                total.totals[i] += x.totals[i];
            }
            total.c += x.c;
            total.r += x.r;
            let (m, ch) = alignment(c, rr);
            mm += m;
            mch += ch;
            mcl += c.len();
            mrl += rr.len();
            rouges.push(rouge(c, rr));
        }
    }
    OracleReport {
        bleu: [1, 2, 3, 4].map(|n| bleu(&total, n, None)),
        meteor: meteor(mm, mch, mcl, mrl),
        rouge_l: 100.0 * rouges.iter().sum::<f64>() / rouges.len() as f64,
        objective: objectives.iter().sum::<f64>() / objectives.len() as f64,
        assignments,
    }
}
