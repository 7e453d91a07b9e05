use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses flat `key = value` lines. Blank lines and `#` comments are skipped;
/// keys are lower-cased with `-` folded to `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::malformed("config", format!("line {}: expected 'key = value'", no + 1)))?;
        let key = k.trim().trim_start_matches("--").to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(Error::malformed("config", format!("line {}: empty key", no + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    parse_config(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
