//! Line-based `key = value` text with optional `[section]` headers and `#` comments.
//!
//! Entries before the first header belong to an unnamed section. Sections may repeat
//! (window files carry one `[term]` block per Gaussian).

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    pub name: String,
    /// Line number of the header (0 for the unnamed leading section).
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|e| parse_f64(e)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::Parse {
            line: self.line,
            reason: format!("section [{}] is missing `{key}`", self.name),
        })
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|e| {
                e.value.parse::<u64>().map_err(|_| Error::Parse {
                    line: e.line,
                    reason: format!("`{}` is not a non-negative integer: {}", e.key, e.value),
                })
            })
            .transpose()
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }
}

fn parse_f64(e: &Entry) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| Error::Parse {
        line: e.line,
        reason: format!("`{}` is not a number: {}", e.key, e.value),
    })
}

/// Parses a document into sections, in file order.
pub fn parse(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section::default()];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("unterminated section header: {line}"),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            reason: format!("expected `key = value`: {line}"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                reason: "empty key".into(),
            });
        }
        sections
            .last_mut()
            .expect("at least the leading section")
            .entries
            .push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: line_no,
            });
    }
    Ok(sections)
}

/// Incremental writer for the same format.
#[derive(Debug, Default)]
pub struct Writer {
    out: String,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.out.is_empty() && !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "[{name}]");
        self
    }

    pub fn entry(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.out)
    }
}
