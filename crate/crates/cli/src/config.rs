//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; everything after the
//! first `=` is the value. Keys are the long flag names with `-` replaced by
//! `_` (`snapshot_every`, `lambda0`, ...). Command-line flags win over file
//! values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key = value", no + 1)))?;
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return Err(CliError::Invalid(format!("config line {}: empty key", no + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Invalid(format!("config line {}: duplicate key {key}", no + 1)));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Invalid(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    /// Fail on keys outside `known`, so typos do not pass silently.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), CliError> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(CliError::Invalid(format!("unknown config key {k}; expected one of {}", known.join(", ")))),
            None => Ok(()),
        }
    }
}

/// Resolved parameters of one command, in key order, for the JSON reports.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub values: BTreeMap<String, String>,
}

impl Resolved {
    /// `flag`, else the file value, else `default`.
    pub fn pick<T>(&mut self, file: &ConfigFile, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString,
    {
        let v = match flag {
            Some(v) => v,
            None => file.get(key)?.unwrap_or(default),
        };
        self.values.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn pick_opt<T>(&mut self, file: &ConfigFile, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + ToString,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => file.get(key)?,
        };
        if let Some(v) = &v {
            self.values.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }
}
