//! Flat `key = value` text documents with optional `[section]` headers.
//!
//! Used for model configs, run configs, channel statistics, search spaces and
//! generator specs. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvSection {
    pub name: Option<String>,
    pub entries: Vec<(String, String)>,
}

impl KvSection {
    pub fn named(name: impl Into<String>) -> Self {
        Self { name: Some(name.into()), entries: Vec::new() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.to_string()))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| KvError::BadValue { key: key.to_string(), value: v.to_string() }),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Rejects any key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), KvError> {
        for (i, (k, _)) in self.entries.iter().enumerate() {
            if !allowed.contains(&k.as_str()) {
                return Err(KvError::UnknownKey(k.clone()));
            }
            if self.entries[..i].iter().any(|(p, _)| p == k) {
                return Err(KvError::DuplicateKey(k.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    pub sections: Vec<KvSection>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut sections = vec![KvSection::default()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.push(KvSection::named(name.trim()));
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(KvError::Syntax { line: i + 1, text: raw.to_string() });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError::Syntax { line: i + 1, text: raw.to_string() });
            }
            sections.last_mut().unwrap().entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(Self { sections })
    }

    /// The unnamed leading section.
    pub fn root(&self) -> &KvSection {
        &self.sections[0]
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a KvSection> + 'a {
        self.sections.iter().filter(move |s| s.name.as_deref() == Some(name))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if let Some(name) = &s.name {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{name}]");
            }
            for (k, v) in &s.entries {
                if v.is_empty() {
                    let _ = writeln!(out, "{k} =");
                } else {
                    let _ = writeln!(out, "{k} = {v}");
                }
            }
        }
        out
    }
}

impl From<KvSection> for KvDoc {
    fn from(root: KvSection) -> Self {
        Self { sections: vec![root] }
    }
}
