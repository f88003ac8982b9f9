use std::str::FromStr;

use serde_json::Value;

use super::{RawRecord, Source};
use crate::text::normalize;

/// Input layouts understood by [`parse`].
///
/// * `C3`: a JSON array of documents `[[paragraph lines], [{question, choice, answer}], id]`,
///   where `answer` is the text of the correct choice.
/// * `LogiQA`: a JSON array or JSON lines of objects with `text`/`context`,
///   `question`/`query`, `options` and `answer`/`correct_option` (index or letter).
/// * `Generic`: JSON lines `{context, question, options, answer_index}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    C3,
    LogiQA,
    Generic,
}

impl Format {
    pub fn source(self) -> Source {
        match self {
            Format::C3 => Source::C3,
            Format::LogiQA => Source::LogiQA,
            Format::Generic => Source::Generic,
        }
    }
}

impl FromStr for Format {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c3" => Ok(Format::C3),
            "logiqa" => Ok(Format::LogiQA),
            "generic" => Ok(Format::Generic),
            _ => Err(ParseError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("unknown input format `{0}` (expected c3, logiqa or generic)")]
    UnknownFormat(String),
    #[error("record {ordinal}: {reason}")]
    Malformed { ordinal: usize, reason: String },
    #[error("input is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn malformed(ordinal: usize, reason: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        ordinal,
        reason: reason.into(),
    }
}

/// Parses with a textual format tag, as given on the command line.
pub fn parse_tagged(tag: &str, bytes: &[u8]) -> Result<Vec<RawRecord>, ParseError> {
    parse(tag.parse()?, bytes)
}

/// Splits a source file into one [`RawRecord`] per question. Record ordinals
/// in errors count questions from zero across the whole file.
pub fn parse(format: Format, bytes: &[u8]) -> Result<Vec<RawRecord>, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| malformed(0, format!("invalid utf-8: {e}")))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    match format {
        Format::C3 => parse_c3(text),
        Format::LogiQA => parse_objects(text, Source::LogiQA),
        Format::Generic => parse_objects(text, Source::Generic),
    }
}

fn parse_c3(text: &str) -> Result<Vec<RawRecord>, ParseError> {
    let docs: Vec<Value> = serde_json::from_str(text)?;
    let mut out = Vec::new();
    for doc in docs {
        let ordinal = out.len();
        let parts = doc
            .as_array()
            .ok_or_else(|| malformed(ordinal, "document is not an array"))?;
        let context = match parts.first() {
            Some(Value::Array(lines)) => lines
                .iter()
                .map(|l| l.as_str().ok_or_else(|| malformed(ordinal, "paragraph line is not a string")))
                .collect::<Result<Vec<_>, _>>()?
                .join("\n"),
            Some(Value::String(s)) => s.clone(),
            _ => return Err(malformed(ordinal, "document has no paragraph")),
        };
        let questions = parts
            .get(1)
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(ordinal, "document has no question list"))?;
        for q in questions {
            let ordinal = out.len();
            let question = str_field(q, &["question"], ordinal)?;
            let options = options_field(q, &["choice", "options"], ordinal)?;
            let answer = str_field(q, &["answer"], ordinal)?;
            let wanted = normalize(&answer);
            let answer_index = options
                .iter()
                .position(|o| normalize(o) == wanted)
                .ok_or_else(|| malformed(ordinal, format!("answer `{answer}` is not among the options")))?;
            out.push(checked(Source::C3, context.clone(), question, options, answer_index, ordinal)?);
        }
    }
    Ok(out)
}

/// Object-per-record layouts: a JSON array or JSON lines.
fn parse_objects(text: &str, source: Source) -> Result<Vec<RawRecord>, ParseError> {
    let values: Vec<Value> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        let mut values = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let ordinal = values.len();
            values.push(
                serde_json::from_str(line).map_err(|e| malformed(ordinal, format!("invalid JSON: {e}")))?,
            );
        }
        values
    };
    values
        .iter()
        .enumerate()
        .map(|(ordinal, v)| object_record(v, source, ordinal))
        .collect()
}

fn object_record(v: &Value, source: Source, ordinal: usize) -> Result<RawRecord, ParseError> {
    if !v.is_object() {
        return Err(malformed(ordinal, "record is not a JSON object"));
    }
    let (context_keys, question_keys, answer_keys): (&[&str], &[&str], &[&str]) = match source {
        Source::Generic => (&["context"], &["question"], &["answer_index"]),
        _ => (&["text", "context"], &["question", "query"], &["answer", "correct_option", "answer_index"]),
    };
    let context = str_field(v, context_keys, ordinal)?;
    let question = str_field(v, question_keys, ordinal)?;
    let options = options_field(v, &["options"], ordinal)?;
    let answer = answer_keys
        .iter()
        .find_map(|k| v.get(*k))
        .ok_or_else(|| malformed(ordinal, format!("missing field `{}`", answer_keys[0])))?;
    let answer_index = answer_index(answer, source, ordinal)?;
    checked(source, context, question, options, answer_index, ordinal)
}

fn answer_index(v: &Value, source: Source, ordinal: usize) -> Result<usize, ParseError> {
    if let Some(i) = v.as_u64() {
        return Ok(i as usize);
    }
    if source != Source::Generic {
        if let Some(s) = v.as_str() {
            let s = s.trim();
            let mut chars = s.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                let c = c.to_ascii_uppercase();
                if c.is_ascii_uppercase() {
                    return Ok((c as u8 - b'A') as usize);
                }
            }
            if let Ok(i) = s.parse::<usize>() {
                return Ok(i);
            }
        }
    }
    Err(malformed(ordinal, format!("unusable answer value {v}")))
}

fn str_field(v: &Value, keys: &[&str], ordinal: usize) -> Result<String, ParseError> {
    match keys.iter().find_map(|k| v.get(*k)) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(malformed(ordinal, format!("field `{}` is not a string: {other}", keys[0]))),
        None => Err(malformed(ordinal, format!("missing field `{}`", keys[0]))),
    }
}

fn options_field(v: &Value, keys: &[&str], ordinal: usize) -> Result<Vec<String>, ParseError> {
    let arr = keys
        .iter()
        .find_map(|k| v.get(*k))
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(ordinal, format!("missing option list `{}`", keys[0])))?;
    arr.iter()
        .map(|o| {
            o.as_str()
                .map(str::to_string)
                .ok_or_else(|| malformed(ordinal, "option is not a string"))
        })
        .collect()
}

fn checked(
    source: Source,
    context: String,
    question: String,
    options: Vec<String>,
    answer_index: usize,
    ordinal: usize,
) -> Result<RawRecord, ParseError> {
    if normalize(&context).is_empty() {
        return Err(malformed(ordinal, "empty context"));
    }
    if normalize(&question).is_empty() {
        return Err(malformed(ordinal, "empty question"));
    }
    if options.is_empty() {
        return Err(malformed(ordinal, "no options"));
    }
    if answer_index >= options.len() {
        return Err(malformed(
            ordinal,
            format!("answer index {answer_index} out of range for {} options", options.len()),
        ));
    }
    Ok(RawRecord {
        source,
        context,
        question,
        options,
        answer_index,
    })
}
