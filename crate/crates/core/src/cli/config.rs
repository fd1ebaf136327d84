//! Flat `key = value` configuration and flag/file/default resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// keys may use `-` or `_` interchangeably.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected `key = value`",
                lineno + 1
            ))
        })?;
        let key = normalize_key(key.trim());
        if key.is_empty() {
            return Err(CliError::Usage(format!(
                "config line {}: empty key",
                lineno + 1
            )));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config key `{key}` given twice")));
        }
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    key.replace('_', "-")
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Resolves parameters with precedence flag > config file > default and
/// records every resolved value for output metadata.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            ..Self::default()
        }
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let Some(raw) = self.file.get(key) else {
            return Ok(None);
        };
        self.used.insert(key.to_string());
        raw.parse::<T>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`")))
    }

    pub fn get<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        let value = match flag {
            Some(v) => {
                self.used.insert(key.to_string());
                v
            }
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Like [`get`](Self::get) but kept out of the recorded configuration,
    /// for values such as the output directory that must not change artifacts.
    pub fn get_unrecorded<T: FromStr>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.file_value(key)?.unwrap_or(default)),
        }
    }

    /// Like [`get`](Self::get) without a default; absent values are recorded
    /// as `auto`.
    pub fn get_opt<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => {
                self.used.insert(key.to_string());
                Some(v)
            }
            None => self.file_value(key)?,
        };
        let shown = value.as_ref().map_or("auto".to_string(), |v| v.to_string());
        self.resolved.insert(key.to_string(), shown);
        Ok(value)
    }

    /// Records a derived value that is not itself a parameter.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Fails on config keys that no parameter consumed.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k) && !self.resolved.contains_key(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown config keys: {unknown:?}")));
        }
        Ok(self.resolved)
    }
}

/// Parses a list of positive numbers: `a,b,c`, `lo:hi:count` (linear) or
/// `lo:hi:count:log`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("grid `{text}`: {why}"));
    let text = text.trim();
    if text.is_empty() {
        return Err(bad("empty grid"));
    }
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad("expected lo:hi:count[:log]"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad("bad lo"))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad("bad hi"))?;
        let count: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
        let log = match parts.get(3) {
            None | Some(&"lin") => false,
            Some(&"log") => true,
            Some(_) => return Err(bad("spacing must be `lin` or `log`")),
        };
        if count == 0 {
            return Err(bad("count must be >= 1"));
        }
        if count == 1 {
            vec![lo]
        } else if log {
            if lo <= 0.0 || hi <= 0.0 {
                return Err(bad("log spacing needs positive bounds"));
            }
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        } else {
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect()
        }
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_, _>>()?
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}
