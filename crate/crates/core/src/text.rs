//! Text normalization shared by every module.
//!
//! All equality checks in the toolkit (option de-duplication, answer lookup,
//! template matching) run on normalized text, so the same string always
//! normalizes the same way regardless of where it came from.

use unicode_normalization::UnicodeNormalization;

/// NFC, trim, and collapse every internal whitespace run to a single space.
pub fn normalize(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let mut out = String::with_capacity(nfc.len());
    for word in nfc.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Folds full-width ASCII variants and the ideographic space to their
/// half-width forms, then lowercases. Used for template matching.
pub fn fold_width_case(text: &str) -> String {
    normalize(text)
        .chars()
        .map(|c| match c {
            '\u{3000}' => ' ',
            '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
            _ => c,
        })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Length in tokens, where a token is one Unicode scalar value.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_whitespace_and_trims() {
        assert_eq!(normalize("  天空 \t 是\n蓝色的  "), "天空 是 蓝色的");
        assert_eq!(normalize("   "), "");
    }

    #[test]
    fn composes_to_nfc() {
        // "e" + combining acute
        assert_eq!(normalize("e\u{301}"), "\u{e9}");
    }

    #[test]
    fn folds_full_width() {
        assert_eq!(fold_width_case("下列说法正确的是？ＡＢｃ"), "下列说法正确的是?abc");
        assert_eq!(fold_width_case("甲\u{3000}乙"), "甲 乙");
    }
}
