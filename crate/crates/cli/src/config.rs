//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # global defaults, visible from every section
//! dt = 0.01
//!
//! [twoqubit-scan]
//! a = 0, 1, 2, 3, 4, 5
//! t = 2, 4, 8, 16, 32, 64, 128
//! ```
//!
//! Lists are comma separated. Keys in a section shadow global keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: key `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    global: BTreeMap<String, Entry>,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut current: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(ConfigError::Syntax {
                        line,
                        message: "empty section name".into(),
                    });
                }
                cfg.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{body}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("invalid key `{key}`"),
                });
            }
            let table = match &current {
                Some(name) => cfg.sections.get_mut(name).expect("section exists"),
                None => &mut cfg.global,
            };
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if let Some(prev) = table.insert(key.to_string(), entry) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// View of `[name]` with global fallback; an absent section is empty.
    pub fn section(&self, name: &str) -> Section<'_> {
        Section {
            name: name.to_string(),
            own: self.sections.get(name),
            global: &self.global,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Section<'a> {
    name: String,
    own: Option<&'a BTreeMap<String, Entry>>,
    global: &'a BTreeMap<String, Entry>,
}

impl Section<'_> {
    /// An empty section: every getter returns its default.
    pub fn empty() -> Section<'static> {
        static EMPTY: BTreeMap<String, Entry> = BTreeMap::new();
        Section {
            name: String::new(),
            own: None,
            global: &EMPTY,
        }
    }

    /// Rejects keys of this section (not the global ones) outside `allowed`.
    /// `workers` is an execution setting accepted everywhere.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        if let Some(own) = self.own {
            for (key, e) in own {
                if key != "workers" && !allowed.contains(&key.as_str()) {
                    return Err(ConfigError::UnknownKey {
                        line: e.line,
                        section: self.name.clone(),
                        key: key.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.own
            .and_then(|m| m.get(key))
            .or_else(|| self.global.get(key))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entry(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|err: T::Err| ConfigError::Value {
                line: e.line,
                key: key.to_string(),
                message: format!("cannot parse `{}`: {err}", e.value),
            }),
        }
    }

    pub fn get_list<T: FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T: Clone,
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entry(key) else {
            return Ok(default.to_vec());
        };
        let items: Vec<&str> = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(ConfigError::Value {
                line: e.line,
                key: key.to_string(),
                message: "empty list".into(),
            });
        }
        items
            .into_iter()
            .map(|item| {
                item.parse().map_err(|err: T::Err| ConfigError::Value {
                    line: e.line,
                    key: key.to_string(),
                    message: format!("cannot parse `{item}`: {err}"),
                })
            })
            .collect()
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err: T::Err| ConfigError::Value {
                    line: e.line,
                    key: key.to_string(),
                    message: format!("cannot parse `{}`: {err}", e.value),
                }),
        }
    }
}

/// Validation helpers shared by the experiment parameter types.
pub fn require(cond: bool, key: &str, message: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key: key.to_string(),
            message: message.to_string(),
        })
    }
}

pub fn require_positive(values: &[f64], key: &str) -> Result<(), ConfigError> {
    require(!values.is_empty(), key, "grid must not be empty")?;
    require(
        values.iter().all(|v| v.is_finite() && *v > 0.0),
        key,
        "values must be positive",
    )
}
