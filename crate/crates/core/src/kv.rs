//! Flat `key = value` text files, shared by the model file and the
//! experiment config.
//!
//! Blank lines and lines starting with `#` are ignored. A trailing `#`
//! comment after a value is stripped. Keys are case-sensitive and may
//! appear at most once.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct KvFile {
    pub origin: String,
    pub entries: Vec<Entry>,
}

impl KvFile {
    pub fn parse(origin: &str, text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let trimmed = stripped.trim();
            if trimmed.is_empty() {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Config {
                    path: origin.to_string(),
                    line,
                    msg: format!("expected `key = value`, got `{trimmed}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    path: origin.to_string(),
                    line,
                    msg: "empty key".into(),
                });
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::Config {
                    path: origin.to_string(),
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(KvFile {
            origin: origin.to_string(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(self.error(e, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }

    pub fn error(&self, entry: &Entry, msg: impl Into<String>) -> Error {
        Error::Config {
            path: self.origin.clone(),
            line: entry.line,
            msg: msg.into(),
        }
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| Error::Config {
            path: self.origin.clone(),
            line: 0,
            msg: format!("missing required key `{key}`"),
        })
    }

    pub fn parse_value<T: std::str::FromStr>(&self, entry: &Entry) -> Result<T> {
        entry
            .value
            .parse::<T>()
            .map_err(|_| self.error(entry, format!("cannot parse `{}` for `{}`", entry.value, entry.key)))
    }

    pub fn parse_list(&self, entry: &Entry) -> Result<Vec<f64>> {
        entry
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| self.error(entry, format!("`{s}` is not a number in `{}`", entry.key)))
            })
            .collect()
    }
}
