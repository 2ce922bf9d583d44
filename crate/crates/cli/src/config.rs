//! Flat `key = value` experiment configs.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        text.parse()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| anyhow!("config is missing {key:?}"))?;
        v.parse().map_err(|e| anyhow!("config key {key:?}: {e}"))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_some() { self.get(key) } else { Ok(default) }
    }

    /// Comma list whose items are numbers or inclusive `lo:hi:step` ranges.
    pub fn list<T: FromStr + Copy + Into<f64>>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| anyhow!("config is missing {key:?}"))?;
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let num = |s: &str| s.parse::<T>().map_err(|e| anyhow!("config key {key:?}: {s:?}: {e}"));
            match parts.as_slice() {
                [x] => out.push(num(x)?),
                [lo, hi, step] => {
                    let (lo, hi, step) = (lo.parse::<u64>()?, hi.parse::<u64>()?, step.parse::<u64>()?);
                    if step == 0 || hi < lo {
                        bail!("config key {key:?}: bad range {item:?}");
                    }
                    for x in (lo..=hi).step_by(step as usize) {
                        out.push(num(&x.to_string())?);
                    }
                }
                _ => bail!("config key {key:?}: bad list item {item:?}"),
            }
        }
        Ok(out)
    }

    /// Whitespace-separated words.
    pub fn words(&self, key: &str) -> Result<Vec<String>> {
        let v = self.raw(key).ok_or_else(|| anyhow!("config is missing {key:?}"))?;
        Ok(v.split_whitespace().map(String::from).collect())
    }

    /// Canonical rendering, written into output metadata.
    pub fn summary(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}

impl FromStr for Config {
    type Err = anyhow::Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        let c: Config = "# comment\nc = 5, 10\nrates = 1:9:4, 20 # tail\npolicies = flb greedy\n".parse().unwrap();
        assert_eq!(c.list::<u32>("c").unwrap(), vec![5, 10]);
        assert_eq!(c.list::<f64>("rates").unwrap(), vec![1.0, 5.0, 9.0, 20.0]);
        assert_eq!(c.words("policies").unwrap(), vec!["flb", "greedy"]);
        assert_eq!(c.get_or("trials", 7u32).unwrap(), 7);
        assert!(c.get::<u32>("missing").is_err());
    }
}
