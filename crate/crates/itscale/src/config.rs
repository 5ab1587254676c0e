//! Flat TOML defaults for command flags.
//!
//! Keys are long flag names (`tau-c = 500`, `q = [1, 2, 3]`). A key is
//! applied when the chosen command has that flag and the command line does
//! not set it; keys no command knows are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const CONFIG_ENV: &str = "ITSCALE_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    /// Key and value rendered as flag text.
    pub entries: Vec<(String, String)>,
}

/// `--config` from the argument list, else the environment.
pub fn locate(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn load(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<ConfigFile> {
    let fail = |message: String| CliError::Config { path: path.to_owned(), message };
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| fail(e.message().to_owned()))?;
    let mut entries = Vec::with_capacity(table.len());
    for (key, value) in table {
        if key == "config" {
            return Err(fail("a config file cannot name another config file".into()));
        }
        let rendered = render(&value).ok_or_else(|| fail(format!("{key}: expected a scalar or a flat array")))?;
        entries.push((key, rendered));
    }
    Ok(ConfigFile { path: path.to_owned(), entries })
}

fn render(v: &toml::Value) -> Option<String> {
    use toml::Value::*;
    match v {
        String(s) => Some(s.clone()),
        Integer(i) => Some(i.to_string()),
        Float(f) => Some(f.to_string()),
        Boolean(b) => Some(b.to_string()),
        Array(items) => items
            .iter()
            .map(|i| if matches!(i, Array(_) | Table(_)) { None } else { render(i) })
            .collect::<Option<Vec<_>>>()
            .map(|parts| parts.join(",")),
        Datetime(d) => Some(d.to_string()),
        Table(_) => None,
    }
}

/// Appends `--key=value` for every entry the command accepts and the
/// command line leaves unset.
pub fn apply(
    mut argv: Vec<String>,
    config: &ConfigFile,
    accepted: &BTreeSet<String>,
    known: &BTreeSet<String>,
) -> Result<Vec<String>> {
    for (key, value) in &config.entries {
        if !known.contains(key) {
            return Err(CliError::Config { path: config.path.clone(), message: format!("unknown key {key}") });
        }
        if !accepted.contains(key) {
            continue;
        }
        let flag = format!("--{key}");
        let prefix = format!("--{key}=");
        if argv.iter().any(|a| *a == flag || a.starts_with(&prefix)) {
            continue;
        }
        argv.push(format!("--{key}={value}"));
    }
    Ok(argv)
}
