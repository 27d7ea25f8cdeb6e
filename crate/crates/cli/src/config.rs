use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Comma-separated list on the command line, a JSON array in config files.
/// An empty string is the empty list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

pub fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage("config must be a JSON object".into())),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

fn keys_of<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    }
}

/// Overlays config entries onto flag values. Every config key must belong
/// to one of `parts`; `null` entries leave the flag value alone.
pub fn merge<A, B>(global: &A, command: &B, config: &Map<String, Value>) -> Result<(A, B), CliError>
where
    A: Serialize + DeserializeOwned,
    B: Serialize + DeserializeOwned,
{
    let mut a = keys_of(global);
    let mut b = keys_of(command);
    for (key, value) in config {
        let slot = if a.contains_key(key) {
            &mut a
        } else if b.contains_key(key) {
            &mut b
        } else {
            return Err(CliError::Usage(format!("unknown config key {key:?}")));
        };
        if !value.is_null() {
            slot.insert(key.clone(), value.clone());
        }
    }
    Ok((parse(a)?, parse(b)?))
}

fn parse<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Flags {
        sigma: Option<f64>,
        #[serde(rename = "K")]
        modes: Option<usize>,
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Common {
        reproducible: bool,
    }

    #[test]
    fn lists_parse() {
        assert_eq!("1, 2,3".parse::<List<u64>>().unwrap().0, vec![1, 2, 3]);
        assert!("".parse::<List<u64>>().unwrap().0.is_empty());
        assert!("1,x".parse::<List<u64>>().is_err());
    }

    #[test]
    fn config_wins_and_unknown_keys_fail() {
        let flags = Flags {
            sigma: Some(0.5),
            modes: None,
        };
        let common = Common {
            reproducible: false,
        };
        let cfg: Map<String, Value> =
            serde_json::from_str(r#"{"K": 4, "sigma": null, "reproducible": true}"#).unwrap();
        let (c, f) = merge(&common, &flags, &cfg).unwrap();
        assert_eq!(
            f,
            Flags {
                sigma: Some(0.5),
                modes: Some(4)
            }
        );
        assert!(c.reproducible);
        let bad: Map<String, Value> = serde_json::from_str(r#"{"modes": 4}"#).unwrap();
        assert!(merge(&common, &flags, &bad).is_err());
    }
}
