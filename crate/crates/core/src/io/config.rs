//! Line-oriented `key=value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Later keys override
//! earlier ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                let (k, v) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                    path: None,
                    offset,
                    message: format!("expected key=value, got `{trimmed}`"),
                })?;
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
            offset += line.len();
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse {
                offset, message, ..
            } => Error::Parse {
                path: Some(path.to_path_buf()),
                offset,
                message,
            },
            other => other,
        })
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::invalid(format!("config key `{key}` has bad value `{v}`")))
            })
            .transpose()
    }

    /// Flag value if present, else config value, else `default`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}
