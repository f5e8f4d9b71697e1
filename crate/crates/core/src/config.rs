//! The run configuration: one JSON document holding every knob of a run,
//! saved fully materialized next to its outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datagen::{reference_templates, GenConfig};
use crate::experiments::VARIANT_NAMES;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    /// Sessions per template.
    pub count_per_template: usize,
    pub templates: Vec<GenConfig>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            count_per_template: 3,
            templates: reference_templates(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub variants: Vec<String>,
    /// Epoch cap per variant.
    pub max_epochs: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            variants: VARIANT_NAMES.iter().map(|s| s.to_string()).collect(),
            max_epochs: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingConfig {
    /// Session trained on; defaults to the first training session with a
    /// music-teacher facilitator.
    pub train_session: Option<String>,
    /// Directory of `<session_id>.messages.csv` files with external vectors.
    pub external_messages_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root of all randomness.
    pub seed: u64,
    pub corpus_dir: PathBuf,
    pub run_dir: PathBuf,
    pub generate: GenerateConfig,
    pub train: TrainConfig,
    pub ablation: AblationConfig,
    pub encodings: EncodingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            corpus_dir: PathBuf::from("corpus"),
            run_dir: PathBuf::from("run"),
            generate: GenerateConfig::default(),
            train: TrainConfig::default(),
            ablation: AblationConfig::default(),
            encodings: EncodingConfig::default(),
        }
    }
}

/// File name of the materialized config inside a run directory.
pub const RESOLVED_FILE: &str = "config.resolved.json";

impl RunConfig {
    pub fn parse(json: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(json).map_err(|e| Error::parse("run config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.generate.count_per_template == 0 {
            return Err(Error::Config("count_per_template must be positive".into()));
        }
        for t in &self.generate.templates {
            t.validate()?;
        }
        for v in &self.ablation.variants {
            if !VARIANT_NAMES.contains(&v.as_str()) {
                return Err(Error::Config(format!("unknown variant {v:?}")));
            }
        }
        Ok(())
    }

    /// Apply `key=value` overrides; `key` is a dotted path and `value` is
    /// read as JSON, falling back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        for o in overrides {
            let (key, raw) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {:?} is not key=value", o.as_ref())))?;
            set_path(&mut v, key, parse_value(raw))?;
        }
        let cfg: RunConfig =
            serde_json::from_value(v).map_err(|e| Error::Config(format!("override: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.get_mut(*part)
                    .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("{key:?}: {part:?} is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("{key:?}: index {idx} of {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("{key:?}: {part:?} is not a section"))),
        };
    }
    Err(Error::Config("empty override key".into()))
}
