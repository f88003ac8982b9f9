//! Synthetic corpora built from an alphabet that cannot spell any shipped
//! template pattern, so templated-ness is decided only by the stems below.

use dgkit::corpus::{ItemTags, McqItem, RawRecord, Source};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: &[char] = &[
    '天', '地', '人', '山', '水', '日', '月', '风', '云', '花', '草', '木', '金', '石', '火', '土', '春', '夏', '秋', '冬',
    '东', '西', '南', '北', '上', '下', '左', '右', '大', '小',
];

pub const TEMPLATED_STEMS: &[&str] = &["以下说法正确的是", "根据上文可以知道", "最能削弱上述论证的是", "与上文推理最类似的是"];

pub fn text(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

pub fn question(rng: &mut impl Rng, templated: bool) -> String {
    if templated {
        format!("{}{}？", text(rng, 0, 4), TEMPLATED_STEMS[rng.gen_range(0..TEMPLATED_STEMS.len())])
    } else {
        format!("{}？", text(rng, 2, 10))
    }
}

/// Four pairwise distinct options.
pub fn options(rng: &mut impl Rng) -> [String; 4] {
    loop {
        let o: [String; 4] = std::array::from_fn(|_| text(rng, 1, 8));
        let mut s = o.to_vec();
        s.sort();
        s.dedup();
        if s.len() == 4 {
            return o;
        }
    }
}

pub fn item(rng: &mut impl Rng, templated: bool, context_len: usize) -> McqItem {
    let [a, d1, d2, d3] = options(rng);
    let context = text(rng, context_len, context_len);
    McqItem::new(context, question(rng, templated), a, [d1, d2, d3], ItemTags::default())
}

/// `n` items, every other one templated, context lengths cycling through
/// the short, medium and long buckets.
pub fn corpus(n: usize, seed: u64) -> Vec<McqItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = [rng.gen_range(5..50), rng.gen_range(50..=200), rng.gen_range(201..260)][i % 3];
            item(&mut rng, i % 2 == 0, len)
        })
        .collect()
}

pub fn raw(item: &McqItem) -> RawRecord {
    RawRecord::from(item)
}

prop_compose! {
    pub fn arb_item()(seed in any::<u64>(), templated in any::<bool>(), len in 1usize..300) -> McqItem {
        item(&mut ChaCha8Rng::seed_from_u64(seed), templated, len)
    }
}

prop_compose! {
    pub fn arb_raw()(seed in any::<u64>(), n_opts in 0usize..7, ans in 0usize..8, kind in 0u8..6) -> RawRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut options: Vec<String> = (0..n_opts).map(|_| text(&mut rng, 1, 4)).collect();
        match kind {
            0 => options = vec!["对".into(), "错".into()],
            1 => options = vec!["正确".into(), "错误".into()],
            2 if !options.is_empty() => options.push(options[0].clone()),
            _ => {}
        }
        let context = if kind == 3 { "  ".to_string() } else { text(&mut rng, 1, 30) };
        RawRecord {
            source: Source::Generic,
            context,
            question: question(&mut rng, seed % 2 == 0),
            options,
            answer_index: ans,
        }
    }
}
