use serde::{Deserialize, Serialize};

use super::ForgeError;

/// Textual scheme for hard-CoT targets: the answer first, then the three
/// distractors, e.g. `答案: 蓝色 ‖ 干扰项: 红色 ‖ 绿色 ‖ 白色`.
///
/// `reserved` must not occur in any answer or distractor; builders check
/// this so that [`CotScheme::parse`] always recovers the original fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CotScheme {
    pub answer_prefix: String,
    pub distractor_prefix: String,
    pub reserved: String,
}

impl Default for CotScheme {
    fn default() -> Self {
        Self {
            answer_prefix: "答案: ".to_string(),
            distractor_prefix: "干扰项: ".to_string(),
            reserved: "‖".to_string(),
        }
    }
}

impl CotScheme {
    fn delimiter(&self) -> String {
        format!(" {} ", self.reserved)
    }

    pub fn render(&self, answer: &str, distractors: &[String]) -> String {
        let delim = self.delimiter();
        format!(
            "{}{}{}{}{}",
            self.answer_prefix,
            answer,
            delim,
            self.distractor_prefix,
            distractors.join(&delim)
        )
    }

    /// Renders only the distractor part, without the answer.
    pub fn render_distractors(&self, distractors: &[String]) -> String {
        format!("{}{}", self.distractor_prefix, distractors.join(&self.delimiter()))
    }

    pub fn parse(&self, target: &str) -> Result<(String, Vec<String>), ForgeError> {
        let rest = target
            .strip_prefix(&self.answer_prefix)
            .ok_or_else(|| ForgeError::CotParse(format!("missing answer prefix in `{target}`")))?;
        let delim = self.delimiter();
        let (answer, tail) = rest
            .split_once(&delim)
            .ok_or_else(|| ForgeError::CotParse(format!("no delimiter after answer in `{target}`")))?;
        let tail = tail
            .strip_prefix(&self.distractor_prefix)
            .ok_or_else(|| ForgeError::CotParse(format!("missing distractor prefix in `{target}`")))?;
        Ok((answer.to_string(), tail.split(&delim).map(str::to_string).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_default_scheme() {
        let s = CotScheme::default();
        let d = vec!["d1".to_string(), "d2".into(), "d3".into()];
        assert_eq!(s.render("A", &d), "答案: A ‖ 干扰项: d1 ‖ d2 ‖ d3");
        assert_eq!(s.parse(&s.render("A", &d)).unwrap(), ("A".to_string(), d));
    }

    #[test]
    fn edge_whitespace_survives() {
        let s = CotScheme::default();
        let d = vec![" d1".to_string(), "d2 ".into(), "".into()];
        assert_eq!(s.parse(&s.render("a ", &d)).unwrap(), ("a ".to_string(), d));
    }

    #[test]
    fn rejects_foreign_text() {
        assert!(CotScheme::default().parse("答案 A").is_err());
        assert!(CotScheme::default().parse("答案: A ‖ d1").is_err());
    }
}
