//! Flat `section.key = value` run configuration. Later assignments win, so
//! command-line overrides are applied after the file.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::ModelConfig;
use crate::trainer::TrainConfig;

pub const DATA_KEYS: [&str; 13] = [
    "train_src", "train_mt", "train_pe", "dev_src", "dev_mt", "dev_pe", "small_src", "small_mt", "small_pe",
    "oversample_factor", "generate", "out", "log",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown config key {0}")]
    UnknownKey(String),
    #[error("bad value for {key}: {msg}")]
    BadValue { key: String, msg: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: BTreeMap::new(),
        }
    }
}

/// `key = value` pairs; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_owned(),
        msg: msg.into(),
    }
}

fn typed(key: &str, old: &Value, raw: &str) -> Result<Value, ConfigError> {
    let number = |raw: &str| -> Option<Value> {
        raw.parse::<u64>()
            .ok()
            .map(Value::from)
            .or_else(|| raw.parse::<f64>().ok().map(Value::from))
    };
    Ok(match old {
        _ if raw == "none" => Value::Null,
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad(key, "expected true or false"))?),
        Value::Number(_) => number(raw).ok_or_else(|| bad(key, "expected a number"))?,
        Value::String(_) => Value::String(raw.to_owned()),
        _ => number(raw).unwrap_or_else(|| Value::String(raw.to_owned())),
    })
}

fn set_field<C: Serialize + DeserializeOwned>(cfg: &mut C, key: &str, field: &str, raw: &str) -> Result<(), ConfigError> {
    let mut map: Map<String, Value> = match serde_json::to_value(&*cfg) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("configs serialize to objects"),
    };
    let old = map.get(field).ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))?;
    let new = typed(key, old, raw)?;
    map.insert(field.to_owned(), new);
    *cfg = serde_json::from_value(Value::Object(map)).map_err(|e| bad(key, e.to_string()))?;
    Ok(())
}

fn flatten<C: Serialize>(prefix: &str, cfg: &C, out: &mut Vec<(String, String)>) {
    if let Ok(Value::Object(m)) = serde_json::to_value(cfg) {
        for (k, v) in m {
            let shown = match v {
                Value::String(s) => s,
                Value::Null => "none".to_owned(),
                other => other.to_string(),
            };
            out.push((format!("{prefix}.{k}"), shown));
        }
    }
}

impl RunConfig {
    /// Applies `pairs` in order, except that `model.preset` and
    /// `train.preset` are applied before everything else.
    pub fn apply_all(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        let is_preset = |k: &str| k == "model.preset" || k == "train.preset";
        for (k, v) in pairs.iter().filter(|(k, _)| is_preset(k)) {
            self.apply(k, v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| !is_preset(k)) {
            self.apply(k, v)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let (section, field) = key.split_once('.').ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))?;
        match (section, field) {
            ("model", "preset") => {
                let sizes = (self.model.cell_size, self.model.embedding_size);
                self.model = match value {
                    "mono_forced" => ModelConfig::mono_forced(),
                    "mono_global" => ModelConfig::mono_global(),
                    "chained" => ModelConfig::chained(),
                    "words" => ModelConfig::words(),
                    _ => return Err(bad(key, "expected mono_forced, mono_global, chained or words")),
                }
                .with_sizes(sizes.0, sizes.1);
            }
            ("train", "preset") => {
                self.train = match value {
                    "real" => TrainConfig::real_data(),
                    "synthetic" => TrainConfig::synthetic(),
                    _ => return Err(bad(key, "expected real or synthetic")),
                };
            }
            ("model", f) => set_field(&mut self.model, key, f, value)?,
            ("train", f) => set_field(&mut self.train, key, f, value)?,
            ("data", f) if DATA_KEYS.contains(&f) => {
                self.data.insert(f.to_owned(), value.to_owned());
            }
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    pub fn data(&self, key: &str) -> Option<&str> {
        self.data.get(key).map(String::as_str)
    }

    /// Every setting as sorted `key=value` pairs.
    pub fn effective(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        flatten("model", &self.model, &mut out);
        flatten("train", &self.train, &mut out);
        out.extend(self.data.iter().map(|(k, v)| (format!("data.{k}"), v.clone())));
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;

    #[test]
    fn file_then_overrides() {
        let pairs = parse_pairs("# toy\nmodel.cell_size = 16\ntrain.patience=none\nmodel.preset = chained\n\ndata.train_mt = a.txt").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_all(&pairs).unwrap();
        assert_eq!(cfg.model.cell_size, 16);
        assert_eq!(cfg.model.architecture, Architecture::Chained);
        assert_eq!(cfg.train.patience, None);
        cfg.apply("train.patience", "5").unwrap();
        cfg.apply("model.dropout_p", "0").unwrap();
        assert_eq!(cfg.train.patience, Some(5));
        assert_eq!(cfg.model.dropout_p, 0.0);
        assert!(cfg.effective().contains(&("data.train_mt".into(), "a.txt".into())));
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = RunConfig::default();
        assert_eq!(parse_pairs("oops"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(cfg.apply("model.colour", "1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(cfg.apply("model.cell_size", "big"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(cfg.apply("model.attention", "sideways"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(cfg.apply("data.nope", "x"), Err(ConfigError::UnknownKey(_))));
    }
}
