//! JSON-lines helpers used by every file-facing operation.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Encode(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads one value per non-blank line. Line numbers in errors are 1-based.
pub fn read<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Decode {
            line: idx + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_str<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    read(text.as_bytes())
}

pub fn write<'a, T: Serialize + 'a>(
    mut writer: impl Write,
    values: impl IntoIterator<Item = &'a T>,
) -> Result<(), JsonlError> {
    for value in values {
        serde_json::to_writer(&mut writer, value)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_string<'a, T: Serialize + 'a>(
    values: impl IntoIterator<Item = &'a T>,
) -> Result<String, JsonlError> {
    let mut buf = Vec::new();
    write(&mut buf, values)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}
