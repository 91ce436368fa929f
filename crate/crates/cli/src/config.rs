//! Optional JSON config file merged under the command-line flags.
//!
//! ```json
//! { "seed": 7, "threads": 2, "train": { "epochs": 30, "lr": 0.0005 } }
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Command;
use crate::error::{io_error, CliError};

pub fn load_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(io_error(path, e).to_string()))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Usage(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
    }
}

/// Top-level keys that are not subcommand sections.
pub fn global_section(config: &Map<String, Value>) -> Map<String, Value> {
    config
        .iter()
        .filter(|(k, _)| !Command::NAMES.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

pub fn command_section(config: &Map<String, Value>, name: &str) -> Result<Map<String, Value>, CliError> {
    match config.get(name) {
        None => Ok(Map::new()),
        Some(Value::Object(m)) => Ok(m.clone()),
        Some(_) => Err(CliError::Usage(format!("config section `{name}` must be an object"))),
    }
}

/// Overlays the flags that differ from their defaults onto `config`.
/// Unknown config keys are rejected.
pub fn merge<T>(flags: &T, config: Map<String, Value>, section: &str) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Value::Object(defaults) = serde_json::to_value(T::default()).expect("options serialize") else {
        unreachable!("option structs serialize to objects")
    };
    if let Some(k) = config.keys().find(|k| !defaults.contains_key(*k)) {
        return Err(CliError::Usage(format!("unknown config key `{k}` in {section}")));
    }
    let Value::Object(given) = serde_json::to_value(flags).expect("options serialize") else {
        unreachable!("option structs serialize to objects")
    };
    let mut merged = config;
    for (k, v) in given {
        if defaults.get(&k) != Some(&v) {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config {section}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::TrainArgs;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_win() {
        let flags = TrainArgs {
            epochs: Some(3),
            ..Default::default()
        };
        let m = merge(&flags, obj(json!({"epochs": 10, "lr": 0.0005, "depth": 2})), "train").unwrap();
        assert_eq!(m.epochs, Some(3));
        assert_eq!(m.lr, Some(0.0005));
        assert_eq!(m.model.depth, Some(2));
    }

    #[test]
    fn unknown_key_is_a_usage_error() {
        let r = merge(&TrainArgs::default(), obj(json!({"epoch": 10})), "train");
        assert!(matches!(r, Err(CliError::Usage(_))));
        let r = merge(&TrainArgs::default(), obj(json!({"epochs": "ten"})), "train");
        assert!(matches!(r, Err(CliError::Usage(_))));
    }

    #[test]
    fn sections() {
        let c = obj(json!({"seed": 1, "train": {"epochs": 2}}));
        assert_eq!(global_section(&c), obj(json!({"seed": 1})));
        assert_eq!(command_section(&c, "train").unwrap(), obj(json!({"epochs": 2})));
        assert!(command_section(&c, "eval").unwrap().is_empty());
    }
}
