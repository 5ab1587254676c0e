//! Daily-closure CSV files.
//!
//! Rows are taken as consecutive trading steps; calendar gaps are not
//! filled or interpolated.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRecord {
    pub date: NaiveDate,
    pub close: f64,
}

/// Reads `date` and `price_column` from a CSV file with a header row.
///
/// Files listed newest first are reversed; any other ordering, including a
/// repeated date, is an error.
pub fn ingest(path: &Path, date_column: &str, price_column: &str) -> Result<Vec<PriceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Invalid(format!("{}: no column named {name}", path.display())))
    };
    let (di, pi) = (column(date_column)?, column(price_column)?);

    let mut records = Vec::new();
    let mut lines = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let parse_err = |message: String| CliError::Parse { path: path.to_owned(), line, message };
        let raw_date = row.get(di).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("date {raw_date:?}: {e}")))?;
        let raw_close = row.get(pi).unwrap_or("");
        let close: f64 = raw_close
            .parse()
            .map_err(|_| parse_err(format!("{price_column} {raw_close:?} is not a number")))?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(parse_err(format!("{price_column} must be positive, got {raw_close}")));
        }
        records.push(PriceRecord { date, close });
        lines.push(line);
    }
    if records.is_empty() {
        return Err(CliError::Invalid(format!("{}: no data rows", path.display())));
    }
    if records.len() > 1 && records[0].date > records[1].date {
        records.reverse();
        lines.reverse();
    }
    for (k, w) in records.windows(2).enumerate() {
        if w[1].date <= w[0].date {
            let what = if w[1].date == w[0].date { "duplicate date" } else { "dates out of order" };
            return Err(CliError::Parse {
                path: path.to_owned(),
                line: lines[k + 1],
                message: format!("{what}: {} after {}", w[1].date, w[0].date),
            });
        }
    }
    Ok(records)
}

/// Writes `date,close` with shortest round-trip float formatting.
pub fn write_price_csv(path: &Path, records: &[PriceRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| csv_error(path, e);
    writer.write_record(["date", "close"]).map_err(fail)?;
    for r in records {
        writer.write_record([r.date.to_string(), r.close.to_string()]).map_err(fail)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    crate::tsv::write_atomic(path, &bytes)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match (e.into_kind(), line) {
        (csv::ErrorKind::Io(source), _) => CliError::io(path, source),
        (kind, Some(line)) => CliError::Parse { path: path.to_owned(), line, message: format!("{kind:?}") },
        (kind, None) => CliError::Invalid(format!("{}: {kind:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn newest_first_is_reversed() {
        let f = write("date,close\n2020-01-03,3\n2020-01-02,2\n2020-01-01,1\n");
        let r = ingest(f.path(), "date", "close").unwrap();
        assert_eq!(r.iter().map(|x| x.close).collect::<Vec<_>>(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn mixed_order_names_the_line() {
        let f = write("date,close\n2020-01-01,1\n2020-01-03,3\n2020-01-02,2\n");
        match ingest(f.path(), "date", "close") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_date_rejected() {
        let f = write("date,close\n2020-01-01,1\n2020-01-01,2\n");
        let err = ingest(f.path(), "date", "close").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn quoted_fields_and_other_columns() {
        let f = write("date,open,\"adj close\"\n2020-01-01,5,\"1.5\"\n2020-01-02,5,\"2.5\"\n");
        let r = ingest(f.path(), "date", "adj close").unwrap();
        assert_eq!(r[1].close, 2.5);
        assert!(ingest(f.path(), "date", "close").is_err());
    }

    #[test]
    fn unparseable_value_names_the_line() {
        let f = write("date,close\n2020-01-01,1\n2020-01-02,abc\n");
        match ingest(f.path(), "date", "close") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
