//! Flat `name = value` reports.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered `name = value` pairs. Parsing skips blank lines and `#` comments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvReport {
    entries: Vec<(String, String)>,
}

impl KvReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, value: impl fmt::Display) {
        self.entries.push((name.to_string(), value.to_string()));
    }

    /// Pushes a float with 17 significant digits so it parses back exactly.
    pub fn push_f64(&mut self, name: &str, value: f64) {
        self.push(name, format!("{value:.16e}"));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, name: &str) -> Result<f64> {
        let raw = self.get(name).ok_or_else(|| Error::Parse(format!("missing key `{name}`")))?;
        raw.parse().map_err(|_| Error::Parse(format!("`{name}` = `{raw}` is not a number")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl fmt::Display for KvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for KvReport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `name = value`", i + 1)))?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = KvReport::new();
        r.push_f64("gamma_n", 0.1 + 0.2);
        r.push("span_ok", true);
        let back: KvReport = r.to_string().parse().unwrap();
        assert_eq!(back, r);
        assert_eq!(back.get_f64("gamma_n").unwrap(), 0.1 + 0.2);
        assert!(back.get_f64("missing").is_err());
    }

    #[test]
    fn comments_and_garbage() {
        let r: KvReport = "# header\n\n a = 1 \n".parse().unwrap();
        assert_eq!(r.get("a"), Some("1"));
        assert!("no separator".parse::<KvReport>().is_err());
    }
}
