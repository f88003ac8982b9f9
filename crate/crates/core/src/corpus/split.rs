use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::McqItem;

const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("split ratios must be finite and non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("cannot parse ratios `{0}`: expected three comma-separated numbers")]
    RatioSyntax(String),
    #[error("item id {0} is listed in more than one split of the manifest")]
    ManifestOverlap(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Ratios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, SplitError> {
        let all = [train, dev, test];
        let ok = all.iter().all(|r| r.is_finite() && *r >= 0.0)
            && (all.iter().sum::<f64>() - 1.0).abs() <= RATIO_TOLERANCE;
        if ok {
            Ok(Self { train, dev, test })
        } else {
            Err(SplitError::BadRatios(all))
        }
    }

    fn as_array(self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }

    /// Largest-remainder apportionment of `n` items; leftovers go to the
    /// largest fractional parts, ties to the earlier split.
    pub fn sizes(self, n: usize) -> [usize; 3] {
        let exact = self.as_array().map(|r| r * n as f64);
        let mut sizes = exact.map(|x| (x + RATIO_TOLERANCE).floor() as usize);
        let assigned: usize = sizes.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let fa = exact[a] - sizes[a] as f64;
            let fb = exact[b] - sizes[b] as f64;
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        sizes
    }
}

impl FromStr for Ratios {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SplitError::RatioSyntax(s.to_string()))?;
        match parts[..] {
            [a, b, c] => Ratios::new(a, b, c),
            _ => Err(SplitError::RatioSyntax(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<McqItem>,
    pub dev: Vec<McqItem>,
    pub test: Vec<McqItem>,
}

/// Item ids per split. Produced by [`split`]; can also be written by hand to
/// reproduce an externally defined partition via [`apply_manifest`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Ratios>,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Deterministic seeded partition. Each split keeps the input order of its
/// members.
pub fn split(items: &[McqItem], ratios: Ratios, seed: u64) -> (Splits, SplitManifest) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [n_train, n_dev, _] = ratios.sizes(items.len());

    let take = |range: std::ops::Range<usize>| {
        let mut chosen = idx[range].to_vec();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| items[i].clone()).collect::<Vec<_>>()
    };
    let splits = Splits {
        train: take(0..n_train),
        dev: take(n_train..n_train + n_dev),
        test: take(n_train + n_dev..items.len()),
    };
    let ids = |v: &[McqItem]| v.iter().map(|i| i.id.clone()).collect();
    let manifest = SplitManifest {
        seed: Some(seed),
        ratios: Some(ratios),
        train: ids(&splits.train),
        dev: ids(&splits.dev),
        test: ids(&splits.test),
    };
    (splits, manifest)
}

/// Re-applies a stored partition. Items whose id the manifest does not list
/// are returned separately.
pub fn apply_manifest(
    items: &[McqItem],
    manifest: &SplitManifest,
) -> Result<(Splits, Vec<McqItem>), SplitError> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (k, ids) in [&manifest.train, &manifest.dev, &manifest.test].into_iter().enumerate() {
        for id in ids {
            if slot.insert(id.as_str(), k).is_some_and(|prev| prev != k) {
                return Err(SplitError::ManifestOverlap(id.clone()));
            }
        }
    }
    let mut splits = Splits::default();
    let mut unassigned = Vec::new();
    for item in items {
        match slot.get(item.id.as_str()) {
            Some(0) => splits.train.push(item.clone()),
            Some(1) => splits.dev.push(item.clone()),
            Some(_) => splits.test.push(item.clone()),
            None => unassigned.push(item.clone()),
        }
    }
    Ok((splits, unassigned))
}
