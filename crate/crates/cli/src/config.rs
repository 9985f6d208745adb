//! Flat `key = value` experiment configs with namespaced keys
//! (`domain.n`, `sweep.N`, `tol.band`, …). `#`-prefixed lines are comments.
//! Unknown keys are rejected after parsing so typos fail loudly.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::HarnessError;

#[derive(Debug, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, HarnessError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("duplicate key '{key}'")));
            }
        }
        Ok(Self { map, used: RefCell::new(BTreeSet::new()) })
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(String::as_str);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn get_str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> Result<f64, HarnessError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| HarnessError::Config(format!("key '{key}': bad float '{s}'"))),
        }
    }

    pub fn get_u64_or(&self, key: &str, default: u64) -> Result<u64, HarnessError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| HarnessError::Config(format!("key '{key}': bad integer '{s}'"))),
        }
    }

    pub fn get_usize_or(&self, key: &str, default: usize) -> Result<usize, HarnessError> {
        Ok(self.get_u64_or(key, default as u64)? as usize)
    }

    /// Comma-separated strictly increasing positive integers (an N sweep).
    pub fn get_sweep_or(&self, key: &str, default: &[u32]) -> Result<Vec<u32>, HarnessError> {
        let values = match self.raw(key) {
            None => default.to_vec(),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<u32>().map_err(|_| {
                        HarnessError::Config(format!("key '{key}': bad sweep entry '{tok}'"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        if values.is_empty() || values.contains(&0) {
            return Err(HarnessError::Config(format!("key '{key}': sweep must be positive")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config(format!(
                "key '{key}': sweep must be strictly increasing"
            )));
        }
        Ok(values)
    }

    /// Echo of every key for the CSV header.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.map.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// Fail on keys that no accessor consumed.
    pub fn reject_unknown(&self) -> Result<(), HarnessError> {
        let used = self.used.borrow();
        let unknown: Vec<&String> =
            self.map.keys().filter(|k| !used.contains(k.as_str())).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(format!(
                "unknown config keys: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}
