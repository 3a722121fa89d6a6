//! Run configuration: a JSON object of parameter keys, overridden 1:1 by
//! command-line flags and validated before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

/// Reads a config file. The top level must be an object.
pub fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("config {}: top level must be an object", path.display()),
    }
}

/// Overlays the flags that were given onto the config keys and validates the
/// result against the command's schema. Unset flags (`None`, `false`) keep
/// the config value.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Map<String, Value>>) -> Result<T> {
    let mut merged = config.cloned().unwrap_or_default();
    let Value::Object(given) = serde_json::to_value(flags)? else {
        bail!("flags must form an object");
    };
    for (key, value) in given {
        if !matches!(value, Value::Null | Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| anyhow!("invalid config: {e}"))
}

pub fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    value.clone().ok_or_else(|| anyhow!("missing required key `{key}`"))
}

/// Dimension parameter `N`: a positive number or `inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dim(pub f64);

impl FromStr for Dim {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Dim(f64::INFINITY)),
            t => t.parse::<f64>().map(Dim).map_err(|e| format!("`{s}`: {e}")),
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Dim(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Output directory of a run; created on first write.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        Self { root, written: Vec::new() }
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(name);
        let parent = path.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        seed: Option<u64>,
        trials: Option<usize>,
        flag: bool,
    }

    #[test]
    fn flags_override_config() {
        let cfg: Map<String, Value> = serde_json::from_str(r#"{"seed": 1, "trials": 5, "flag": true}"#).unwrap();
        let flags = Demo {
            seed: Some(9),
            ..Demo::default()
        };
        let d = resolve(&flags, Some(&cfg)).unwrap();
        assert_eq!(
            d,
            Demo {
                seed: Some(9),
                trials: Some(5),
                flag: true
            }
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let cfg: Map<String, Value> = serde_json::from_str(r#"{"sede": 1}"#).unwrap();
        let err = resolve(&Demo::default(), Some(&cfg)).unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn dim_parses_infinity() {
        assert_eq!("inf".parse::<Dim>().unwrap().0, f64::INFINITY);
        assert_eq!(serde_json::from_str::<Dim>("\"inf\"").unwrap().0, f64::INFINITY);
        assert_eq!(serde_json::from_str::<Dim>("2.5").unwrap().0, 2.5);
    }
}
