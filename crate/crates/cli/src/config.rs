//! key=value configuration files with [section] headers, merged under flags.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Invalid configuration; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub type Usage<T> = std::result::Result<T, UsageError>;

pub fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Sections of a parsed file; keys before any header land in "global".
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Usage<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = "global".to_string();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim().to_string();
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", no + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(usage(format!("config line {}: empty key", no + 1)));
            }
            if sections.entry(current.clone()).or_default().insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(usage(format!("config line {}: duplicate key {key}", no + 1)));
            }
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> BTreeMap<String, String> {
        self.sections.get(name).cloned().unwrap_or_default()
    }
}

/// Comma-separated list value.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list item {x:?}")))
            .collect::<Result<Vec<T>, String>>()
            .and_then(|v| if v.is_empty() { Err("empty list".into()) } else { Ok(List(v)) })
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Resolves each parameter as flag, then config entry, then default, and
/// records the resolved value in resolution order.
#[derive(Debug)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Self {
        Self { file, flags, resolved: Vec::new() }
    }

    fn raw(&self, key: &str) -> Option<&String> {
        self.flags.get(key).or_else(|| self.file.get(key))
    }

    pub fn get<T: FromStr + fmt::Display>(&mut self, key: &str, default: T) -> Usage<T> {
        let value = match self.raw(key) {
            Some(s) => s.parse::<T>().map_err(|_| usage(format!("invalid value {s:?} for {key}")))?,
            None => default,
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    pub fn flag(&mut self, key: &str) -> Usage<bool> {
        self.get(key, false)
    }

    /// Config keys of the section that no parameter consumed.
    pub fn finish(self) -> Usage<Vec<(String, String)>> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.resolved.iter().any(|(r, _)| r == *k)).collect();
        if let Some(k) = unknown.first() {
            return Err(usage(format!("unknown config key {k}")));
        }
        Ok(self.resolved)
    }
}
