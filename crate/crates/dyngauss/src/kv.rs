//! Minimal `key = value` text format used for dataset descriptors and config files.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Parse `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Render a map as `key = value` lines in key order.
pub fn render(map: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in map {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_skips_comments() {
        let map = parse("# header\nfoo = 1\n\nbar = two words\n").unwrap();
        assert_eq!(map["foo"], "1");
        assert_eq!(map["bar"], "two words");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn rejects_missing_equals() {
        assert!(parse("foo 1").is_err());
    }

    #[test]
    fn round_trips() {
        let map = parse("a = 1\nb = 2\n").unwrap();
        assert_eq!(parse(&render(&map)).unwrap(), map);
    }
}
