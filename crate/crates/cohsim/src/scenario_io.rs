//! Scenario files: built-in systems, TOML parsing with validation, dotted
//! path overrides and serialization.

use std::fs;
use std::path::Path;

use cohsim_core::scenario::Scenario;
use toml::Value;

use crate::{CliError, Result};

pub const KUNDUR_2A: &str = include_str!("../data/kundur2a.toml");
pub const IEEE_39: &str = include_str!("../data/ieee39.toml");

/// Names of the built-in systems.
pub const BUILTIN: [&str; 2] = ["kundur2a", "ieee39"];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    match name {
        "kundur2a" => Some(KUNDUR_2A),
        "ieee39" => Some(IEEE_39),
        _ => None,
    }
}

/// Loads a built-in system by name or a scenario file by path, then
/// validates it.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    load_with_overrides(source, &[])
}

/// Like [`load_scenario`], applying `key=value` overrides to the raw
/// document before validation.
pub fn load_with_overrides(source: &str, overrides: &[(String, String)]) -> Result<Scenario> {
    let text = match builtin_text(source) {
        Some(t) => t.to_string(),
        None => fs::read_to_string(Path::new(source))
            .map_err(|e| CliError::Config(format!("cannot read scenario '{source}': {e}")))?,
    };
    let mut doc: Value = toml::from_str(&text).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
    for (k, v) in overrides {
        set_path(&mut doc, k, v)?;
    }
    from_value(doc, source)
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let doc: Value = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    from_value(doc, origin)
}

fn from_value(doc: Value, origin: &str) -> Result<Scenario> {
    let s: Scenario = doc
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{origin}: {}", e.message())))?;
    s.validate().map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    Ok(s)
}

pub fn to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(s).map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

/// Applies a scenario-level override such as `solver.h=0.0025` or
/// `devices.G1.coherency.share=0.5` to a scenario value.
pub fn apply_override(s: &Scenario, key: &str, value: &str) -> Result<Scenario> {
    let mut doc = Value::try_from(s).map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    set_path(&mut doc, key, value)?;
    from_value(doc, "override")
}

/// Parses `key=value`.
pub fn split_assignment(arg: &str) -> Result<(String, String)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(CliError::Config(format!("expected key=value, got '{arg}'"))),
    }
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets a dotted path in a TOML document. Array elements are addressed by
/// index or by their `id` field; missing tables are created.
pub fn set_path(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), parse_value(raw));
                    return Ok(());
                }
                t.entry(part.to_string()).or_insert_with(|| Value::Table(Default::default()))
            }
            Value::Array(a) => {
                let pos = match part.parse::<usize>() {
                    Ok(n) if n < a.len() => n,
                    _ => a
                        .iter()
                        .position(|e| e.get("id").and_then(Value::as_str) == Some(part))
                        .ok_or_else(|| CliError::Config(format!("override {key}: no element '{part}'")))?,
                };
                if last {
                    a[pos] = parse_value(raw);
                    return Ok(());
                }
                &mut a[pos]
            }
            _ => return Err(CliError::Config(format!("override {key}: '{part}' is not a table"))),
        };
    }
    Err(CliError::Config(format!("override {key}: empty path")))
}
