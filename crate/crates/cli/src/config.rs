//! Flag/config-file merging. A config file is a flat JSON object whose keys
//! are the snake_case flag names of the subcommand; flags win.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => Err(anyhow!("config {} must be a JSON object", path.display())),
    }
}

/// Overlays every flag that was given onto the file values.
pub fn resolve<T>(flags: T, file: Option<Map<String, Value>>) -> anyhow::Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let Some(mut merged) = file else {
        return Ok(flags);
    };
    let Value::Object(given) = serde_json::to_value(&flags)? else {
        unreachable!("argument structs serialize to objects");
    };
    for (key, value) in given {
        // unset options and switches left off do not shadow the file
        if !matches!(value, Value::Null | Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid config")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Args {
        lambda: Option<f64>,
        sigma: Option<f64>,
        atm: bool,
    }

    fn file(text: &str) -> Option<Map<String, Value>> {
        match serde_json::from_str(text).unwrap() {
            Value::Object(m) => Some(m),
            _ => None,
        }
    }

    #[test]
    fn flags_override_file() {
        let flags = Args {
            lambda: Some(0.3),
            ..Args::default()
        };
        let got = resolve(flags, file(r#"{"lambda":0.1,"sigma":0.4,"atm":true}"#)).unwrap();
        assert_eq!(
            got,
            Args {
                lambda: Some(0.3),
                sigma: Some(0.4),
                atm: true
            }
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(resolve(Args::default(), file(r#"{"lamda":0.1}"#)).is_err());
        assert!(resolve(Args::default(), file(r#"{"sigma":"x"}"#)).is_err());
    }
}
