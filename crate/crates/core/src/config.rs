//! Key-value text configuration: `key=value` tokens separated by whitespace or
//! newlines, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{BbsError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvConfig {
    pub entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| BbsError::Parse(format!("expected key=value, got '{tok}'")))?;
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(KvConfig { entries })
    }

    /// Later entries win.
    pub fn merge(&mut self, other: &KvConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| BbsError::Parse(format!("{key}={v}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| BbsError::Parse(format!("missing key '{key}'")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<T>().map_err(|e| BbsError::Parse(format!("{key}: {e}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

impl fmt::Display for KvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let mut c = KvConfig::parse("kind=iid p=0.2 # comment\nn=100\n").unwrap();
        assert_eq!(c.require::<f64>("p").unwrap(), 0.2);
        c.merge(&KvConfig::parse("n=5").unwrap());
        assert_eq!(c.require::<usize>("n").unwrap(), 5);
        assert!(KvConfig::parse("oops").is_err());
        assert!(c.require::<usize>("kind").is_err());
    }
}
