//! Optional TOML or JSON run configuration.
//!
//! Keys mirror command-line flag names with dashes turned into
//! underscores. Top-level keys apply to every subcommand; a table named
//! after a subcommand (`[fit]`, `[grid]`, ...) overrides them for that
//! subcommand. Flags given on the command line win over both.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    root: Map<String, Value>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let value: Value = if is_toml {
            let table: toml::Table = toml::from_str(&text).map_err(|e| Error::Decode {
                what: format!("config {}", path.display()),
                offset: e.span().map(|s| s.start),
                message: e.message().to_string(),
            })?;
            serde_json::to_value(table).map_err(|e| Error::argument(e.to_string()))?
        } else {
            crate::persist::decode_json(text.as_bytes(), &format!("config {}", path.display()))?
        };
        match value {
            Value::Object(root) => Ok(Self { root }),
            _ => Err(Error::argument(format!("config {} must be a table of keys", path.display()))),
        }
    }

    pub fn from_value(value: Value) -> Result<Self> {
        match value {
            Value::Object(root) => Ok(Self { root }),
            _ => Err(Error::argument("config must be a table of keys")),
        }
    }

    /// The value for `key` under `section`, else at the top level.
    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> Result<Option<T>> {
        let scoped = self.root.get(section).and_then(|s| s.get(key));
        let Some(v) = scoped.or_else(|| self.root.get(key).filter(|v| !v.is_object())) else {
            return Ok(None);
        };
        serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::argument(format!("config key `{key}`: {e}")))
    }

    /// `flag`, else the config value, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(section, key)?.unwrap_or(default)),
        }
    }

    /// Like [`pick`](Self::pick) for on/off switches: a set flag wins,
    /// otherwise the config decides.
    pub fn switch(&self, section: &str, key: &str, flag: bool) -> Result<bool> {
        Ok(flag || self.get(section, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let cfg = RunConfig::from_value(serde_json::json!({ "k": 30, "seed": 4, "fit": { "k": 20 } })).unwrap();
        assert_eq!(cfg.pick("fit", "k", None, 45usize).unwrap(), 20);
        assert_eq!(cfg.pick("grid", "k", None, 45usize).unwrap(), 30);
        assert_eq!(cfg.pick("fit", "k", Some(7), 45usize).unwrap(), 7);
        assert_eq!(cfg.pick("fit", "epochs", None, 450usize).unwrap(), 450);
        assert!(cfg.pick::<usize>("fit", "seed", None, 0).is_ok());
        let bad = RunConfig::from_value(serde_json::json!({ "k": "many" })).unwrap();
        assert!(bad.pick::<usize>("fit", "k", None, 45).is_err());
    }
}
