//! Scenario files and dotted-key config overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polyscout_core::explore::ConfigBundle;
use polyscout_core::sensor::World;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::world_file::load_world;
use crate::{read_json, HarnessError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    /// World file, relative to the scenario file's directory.
    pub world: PathBuf,
    pub seed: u64,
    pub step_budget: u64,
    #[serde(default)]
    pub overrides: BTreeMap<String, Value>,
    /// Directory `world` is resolved against; set on load.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let mut s: Scenario = read_json(path)?;
        if s.schema != SCHEMA_VERSION {
            return Err(HarnessError::Schema(s.schema));
        }
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn world_path(&self) -> PathBuf {
        self.base_dir.join(&self.world)
    }

    pub fn load_world(&self) -> Result<World, HarnessError> {
        load_world(&self.world_path())
    }

    /// Default configs with the overrides and the step budget applied.
    pub fn config(&self) -> Result<ConfigBundle, HarnessError> {
        let mut cfg = apply_overrides(&ConfigBundle::default(), &self.overrides)?;
        cfg.explore.step_budget = self.step_budget;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sets each dotted key on the JSON form of `base`; every path segment must
/// already exist and the result must deserialize back.
pub fn apply_overrides(base: &ConfigBundle, overrides: &BTreeMap<String, Value>) -> Result<ConfigBundle, HarnessError> {
    let mut doc = serde_json::to_value(base).expect("configs always serialize");
    for (key, value) in overrides {
        set_dotted(&mut doc, key, value.clone())?;
    }
    serde_json::from_value(doc).map_err(|e| HarnessError::Override { key: overrides_list(overrides), reason: e.to_string() })
}

fn overrides_list(overrides: &BTreeMap<String, Value>) -> String {
    overrides.keys().cloned().collect::<Vec<_>>().join(", ")
}

fn set_dotted(doc: &mut Value, key: &str, value: Value) -> Result<(), HarnessError> {
    let err = |reason: &str| HarnessError::Override { key: key.to_string(), reason: reason.to_string() };
    let mut cur = doc;
    for part in key.split('.') {
        cur = cur
            .as_object_mut()
            .ok_or_else(|| err("path runs through a non-object value"))?
            .get_mut(part)
            .ok_or_else(|| err(&format!("unknown key `{part}`")))?;
    }
    *cur = value;
    Ok(())
}

/// Parses a command-line value as JSON, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}
