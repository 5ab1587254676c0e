//! Tab-separated output with `#` header lines, and the matching reader.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// Decimal rendering with 9 significant digits, independent of locale.
/// Magnitudes outside [1e-12, 1e15) fall back to exponent notation.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-12..15).contains(&exp) {
        return sci;
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::with_capacity(24);
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        if int_len < digits.len() {
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// A table being assembled in memory; written in one atomic rename.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[String]) -> Self {
        let mut text = String::new();
        for line in header {
            let _ = writeln!(text, "# {line}");
        }
        Self { text }
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.text.push_str(&names.join("\t"));
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join("\t"));
        self.text.push('\n');
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Writes to `path` through a temporary file in the same directory, or
    /// to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => write_atomic(p, self.text.as_bytes()),
            None => std::io::stdout().write_all(self.text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Columns of a TSV file: comment lines are set aside, the first remaining
/// line is the header.
#[derive(Debug, Clone)]
pub struct ParsedTable {
    /// Text of the `#` lines, marker stripped.
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let comments = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l).to_owned())
            .collect();
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let columns = lines
            .next()
            .ok_or_else(|| CliError::Invalid(format!("{}: no header row", path.display())))?
            .split('\t')
            .map(str::to_owned)
            .collect();
        let rows = lines.map(|l| l.split('\t').map(str::to_owned).collect()).collect();
        Ok(Self { comments, columns, rows })
    }

    pub fn numeric_column(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Invalid(format!("{}: no column named {name}", path.display())))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.get(idx).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| CliError::Parse {
                    path: path.to_owned(),
                    line: i as u64 + 1,
                    message: format!("column {name} is not numeric"),
                })
            })
            .collect()
    }
}
