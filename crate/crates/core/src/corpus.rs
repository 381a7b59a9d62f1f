//! JSON-lines interchange between pipeline stages: one piece per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{label_sequence, StructuralLabels};
use crate::tokenizer::TokenSequence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub id: String,
    pub tokens: TokenSequence,
    /// Leading tokens that were given rather than generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_len: Option<usize>,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<StructuralLabels>,
}

impl TokenRecord {
    pub fn new(id: impl Into<String>, tokens: TokenSequence) -> Self {
        Self {
            id: id.into(),
            tokens,
            prompt_len: None,
            labels: None,
        }
    }

    pub fn with_labels(mut self) -> Self {
        self.labels = Some(label_sequence(&self.tokens));
        self
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[TokenRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TokenRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TokenRecord = serde_json::from_str(&line)?;
        // serde(transparent) bypasses the vocabulary check.
        TokenSequence::new(record.tokens.ids().to_vec()).map_err(|e| {
            Error::Argument(format!("line {}: {e}", lineno + 1))
        })?;
        if record.prompt_len.is_some_and(|p| p > record.tokens.len()) {
            return Err(Error::Argument(format!(
                "line {}: prompt is longer than the sequence",
                lineno + 1
            )));
        }
        if let Some(l) = &record.labels {
            if !l.is_consistent() || l.len() != record.tokens.len() {
                return Err(Error::Argument(format!(
                    "line {}: label streams not aligned with tokens",
                    lineno + 1
                )));
            }
        }
        out.push(record);
    }
    Ok(out)
}
