//! Flat key-value config files.
//!
//! The on-disk format is one `key = value` pair per line, `#` comments,
//! blank lines ignored. Lists are comma separated. This is the format
//! both the training and the generator configs are read from.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed key-value file with typed accessors.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Typed lookup; `default` is used when the key is absent.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad_value(key, v)),
        }
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse().map_err(|_| bad_value(key, item))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value for `{key}`: {value:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_lists() {
        let cfg = KvConfig::parse(
            "# comment\nlr = 0.01\nseed= 42\nrates = 1, 2.5 ,0.5\n\nname = irnn\n",
            "test.cfg",
        )
        .unwrap();
        assert_eq!(cfg.get_or("lr", 0.0).unwrap(), 0.01);
        assert_eq!(cfg.get_or("seed", 0u64).unwrap(), 42);
        assert_eq!(cfg.get_or("missing", 7i32).unwrap(), 7);
        assert_eq!(
            cfg.get_list::<f64>("rates").unwrap().unwrap(),
            vec![1.0, 2.5, 0.5]
        );
        assert_eq!(cfg.raw("name"), Some("irnn"));
    }

    #[test]
    fn rejects_lines_without_separator() {
        let err = KvConfig::parse("just words\n", "bad.cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_unparseable_typed_values() {
        let cfg = KvConfig::parse("lr = fast\n", "t.cfg").unwrap();
        assert!(cfg.get_or("lr", 0.0).is_err());
    }
}
