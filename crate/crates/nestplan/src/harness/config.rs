//! Key-value config files mirroring the CLI flags (`key = value` lines,
//! `#` comments). Flags override file entries.

use std::collections::HashMap;
use std::str::FromStr;

use crate::error::{NestError, Result};

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: HashMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<KvConfig> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(NestError::Parse {
                    line: i + 1,
                    msg: "expected `key = value`".into(),
                });
            };
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(KvConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                NestError::Config(format!("config key '{key}': cannot parse '{v}'"))
            }),
        }
    }

    /// Comma/space separated list of values.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split([',', ' '])
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|_| {
                        NestError::Config(format!("config key '{key}': cannot parse '{s}'"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg = KvConfig::parse("domain = tiger\n# comment\nparticles = 10, 100 ,1000\n").unwrap();
        assert_eq!(cfg.get("domain"), Some("tiger"));
        assert_eq!(cfg.get_list::<usize>("particles").unwrap().unwrap(), vec![10, 100, 1000]);
        assert!(cfg.get("missing").is_none());
        assert!(KvConfig::parse("no equals sign\n").is_err());
        assert!(cfg.get_parse::<usize>("domain").is_err());
    }
}
