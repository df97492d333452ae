//! Flat `key = value` config files with `[section]` headers.

use std::collections::BTreeMap;
use std::path::Path;

/// Keys outside any section are stored under the empty section name.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = ConfigFile::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| format!("line {lineno}: unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {lineno}: expected `key = value`"))?;
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(format!("line {lineno}: empty key"));
            }
            let value = value.trim().trim_matches('"').to_string();
            if out.sections.entry(section.clone()).or_default().insert(key.clone(), value).is_some() {
                return Err(format!("line {lineno}: duplicate key `{key}`"));
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("--config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("--config {}: {e}", path.display()))
    }

    /// Top-level keys overlaid by the subcommand's section.
    pub fn values_for(&self, section: &str) -> BTreeMap<String, String> {
        let mut merged = self.sections.get("").cloned().unwrap_or_default();
        if let Some(s) = self.sections.get(section) {
            merged.extend(s.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        merged
    }
}
