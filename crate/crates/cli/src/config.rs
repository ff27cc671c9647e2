//! Key-value config file supplying defaults; the TREECAP_CONFIG environment
//! variable selects the path and flags override everything. No other
//! environment is consulted.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;

pub const CONFIG_ENV: &str = "TREECAP_CONFIG";

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load() -> Result<Config> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading config {}", path.to_string_lossy()))?;
                Config::parse(&text)
            }
            None => Ok(Config::default()),
        }
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", lineno + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(s) => s.parse().with_context(|| format!("config key `{key}`")),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, flag: Option<u64>, default: u64) -> Result<u64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(s) => s.parse().with_context(|| format!("config key `{key}`")),
            None => Ok(default),
        }
    }

    pub fn u32_or(&self, key: &str, flag: Option<u32>, default: u32) -> Result<u32> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(s) => s.parse().with_context(|| format!("config key `{key}`")),
            None => Ok(default),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let cfg = Config::parse("p = 3\nseed = 7 # comment\n# full comment\n").unwrap();
        assert_eq!(cfg.f64_or("p", None, 2.0).unwrap(), 3.0);
        assert_eq!(cfg.f64_or("p", Some(1.5), 2.0).unwrap(), 1.5);
        assert_eq!(cfg.u64_or("seed", None, 0).unwrap(), 7);
        assert_eq!(cfg.f64_or("s", None, 0.5).unwrap(), 0.5);
        assert!(Config::parse("oops").is_err());
    }
}
