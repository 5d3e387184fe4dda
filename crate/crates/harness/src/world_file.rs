//! On-disk world format.

use std::path::Path;

use polyscout_core::geom::{Point2, Ring};
use polyscout_core::sensor::{FeatureSite, Illumination, Material, Obstacle, World};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{read_json, HarnessError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub schema: u32,
    pub bounds: Vec<Point2>,
    pub obstacles: Vec<ObstacleEntry>,
    pub feature_sites: Vec<SiteEntry>,
    pub illumination: Illumination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleEntry {
    pub ring: Vec<Point2>,
    pub material: Material,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteEntry {
    pub p: Point2,
    pub richness: u32,
}

fn ring(name: impl Fn() -> String, v: &[Point2]) -> Result<Ring, HarnessError> {
    Ring::new(v.to_vec()).map_err(|e| HarnessError::Ring { ring: name(), reason: e.to_string() })
}

impl WorldFile {
    pub fn load(path: &Path) -> Result<WorldFile, HarnessError> {
        read_json(path)
    }

    /// Builds the world and checks every geometric invariant.
    pub fn to_world(&self) -> Result<World, HarnessError> {
        if self.schema != SCHEMA_VERSION {
            return Err(HarnessError::Schema(self.schema));
        }
        let bounds = ring(|| "bounds".to_string(), &self.bounds)?;
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| Ok(Obstacle { ring: ring(|| format!("obstacle {i}"), &o.ring)?, material: o.material }))
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let world = World {
            bounds,
            obstacles,
            feature_sites: self.feature_sites.iter().map(|s| FeatureSite { p: s.p, richness: s.richness }).collect(),
            illumination: self.illumination,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn from_world(world: &World) -> WorldFile {
        WorldFile {
            schema: SCHEMA_VERSION,
            bounds: world.bounds.vertices().to_vec(),
            obstacles: world
                .obstacles
                .iter()
                .map(|o| ObstacleEntry { ring: o.ring.vertices().to_vec(), material: o.material })
                .collect(),
            feature_sites: world.feature_sites.iter().map(|s| SiteEntry { p: s.p, richness: s.richness }).collect(),
            illumination: world.illumination,
        }
    }

    /// Indented JSON with each point on one line.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("world files always serialize");
        let mut s = String::new();
        write_value(&v, 0, &mut s);
        s.push('\n');
        s
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| " ".repeat(n);
    match v {
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                write_value(item, indent + 2, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 2, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Reads, parses and validates a world file.
pub fn load_world(path: &Path) -> Result<World, HarnessError> {
    WorldFile::load(path)?.to_world()
}
