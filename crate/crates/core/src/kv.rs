//! Flat key-value text format used for instance files and experiment
//! configuration.
//!
//! One `key = value` pair per line. Blank lines and lines starting with `#`
//! are ignored. Values are plain strings; list values are space-separated.
//! Floating-point fields are written with Rust's shortest round-trip
//! formatting, so writing and re-reading a file reproduces every `f64`
//! bit-for-bit.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("key {key:?}: cannot parse {value:?} as {wanted}")]
    BadValue {
        key: String,
        value: String,
        wanted: &'static str,
    },
}

/// Parsed key-value document with typed accessors.
#[derive(Debug, Default, Clone)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KvError::Malformed {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(KvError::DuplicateKey(key));
            }
        }
        Ok(Self { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Result<&str, KvError> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| KvError::MissingKey(key.to_string()))
    }

    pub fn opt_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, KvError> {
        parse_typed(key, self.get_str(key)?, "f64")
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, KvError> {
        parse_typed(key, self.get_str(key)?, "usize")
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, KvError> {
        parse_typed(key, self.get_str(key)?, "u64")
    }

    pub fn get_u32(&self, key: &str) -> Result<u32, KvError> {
        parse_typed(key, self.get_str(key)?, "u32")
    }

    /// Space-separated list of floats.
    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>, KvError> {
        let raw = self.get_str(key)?;
        raw.split_whitespace()
            .map(|tok| parse_typed(key, tok, "f64"))
            .collect()
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Vec<usize>, KvError> {
        let raw = self.get_str(key)?;
        raw.split_whitespace()
            .map(|tok| parse_typed(key, tok, "usize"))
            .collect()
    }
}

fn parse_typed<T: std::str::FromStr>(
    key: &str,
    value: &str,
    wanted: &'static str,
) -> Result<T, KvError> {
    value.parse().map_err(|_| KvError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        wanted,
    })
}

/// Incremental writer producing the same layout `KvMap::parse` accepts.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) {
        self.out.push_str("# ");
        self.out.push_str(text);
        self.out.push('\n');
    }

    pub fn blank(&mut self) {
        self.out.push('\n');
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        self.out.push_str(key);
        self.out.push_str(" = ");
        self.out.push_str(&value.to_string());
        self.out.push('\n');
    }

    pub fn put_f64_list(&mut self, key: &str, values: &[f64]) {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        self.put(key, joined);
    }

    pub fn put_usize_list(&mut self, key: &str, values: &[usize]) {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        self.put(key, joined);
    }

    pub fn finish(self) -> String {
        self.out
    }
}
