//! Shared plumbing for the on-disk interchange formats.
//!
//! Text formats (`BTPL/1`, `MSEQ/1`, `PAIR/1`) are JSON documents whose first
//! key is `"format"`; binary formats (`EIGB/1`, `LBL1`) start with a magic.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected format {expected}, found {found}")]
    SchemaVersion { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("truncated or malformed binary data: {0}")]
    Binary(String),
    #[error("inconsistent content: {0}")]
    Inconsistent(String),
    #[error("png error: {0}")]
    Png(String),
}

impl FormatError {
    pub(crate) fn parse(line: usize, message: &str) -> Self {
        FormatError::Parse {
            line,
            message: message.to_string(),
        }
    }
}

#[derive(serde::Deserialize)]
struct Tag {
    format: Option<String>,
}

/// Serializes a versioned document. The `format` field must be the first
/// field of `T` so the tag leads the file.
pub fn to_document<T: Serialize>(value: &T) -> Result<String, FormatError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Parses a versioned document, checking the `format` tag before anything else.
pub fn from_document<T: DeserializeOwned>(text: &str, expected: &str) -> Result<T, FormatError> {
    let tag: Tag = serde_json::from_str(text).map_err(|_| FormatError::SchemaVersion {
        expected: expected.to_string(),
        found: "<unreadable>".to_string(),
    })?;
    match tag.format {
        Some(ref f) if f == expected => Ok(serde_json::from_str(text)?),
        other => Err(FormatError::SchemaVersion {
            expected: expected.to_string(),
            found: other.unwrap_or_else(|| "<missing>".to_string()),
        }),
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    Ok(fs::read_to_string(path)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Little-endian cursor over a byte slice.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.bytes.len() {
            return Err(FormatError::Binary(format!(
                "need {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::Binary(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
