//! CSV ingestion and number formatting shared by the commands.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::CliError;
use crate::composition::RawTable;

/// Significant digits of every number written by the CLI.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Parses a labelled numeric table.
///
/// The first header cell must be empty or `id`; the remaining header cells
/// name the columns. Each following record is a row label and one number
/// per column. Line and column numbers in errors are 1-based.
pub fn parse_table(text: &str) -> Result<RawTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(CliError::parse(1, 1, "empty table")),
        Some(r) => r.map_err(csv_error)?,
    };
    let first = header.get(0).unwrap_or("");
    if !(first.is_empty() || first.eq_ignore_ascii_case("id")) {
        return Err(CliError::parse(1, 1, format!("first header cell must be empty or `id`, found `{first}`")));
    }
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if col_labels.is_empty() {
        return Err(CliError::parse(1, 2, "no columns"));
    }
    let mut seen = HashSet::new();
    for (k, l) in col_labels.iter().enumerate() {
        if l.is_empty() {
            return Err(CliError::parse(1, k + 2, "empty column name"));
        }
        if !seen.insert(l.as_str()) {
            return Err(CliError::DuplicateLabel { line: 1, label: l.clone() });
        }
    }

    let width = col_labels.len() + 1;
    let mut row_labels = Vec::new();
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(CliError::parse(
                line,
                record.len().min(width) + 1,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let label = record[0].to_string();
        if label.is_empty() {
            return Err(CliError::parse(line, 1, "empty row label"));
        }
        if !seen.insert(label.clone()) {
            return Err(CliError::DuplicateLabel { line, label });
        }
        for (k, cell) in record.iter().enumerate().skip(1) {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => cells.push(v),
                _ => {
                    return Err(CliError::NonNumericCell {
                        line,
                        column: k + 1,
                        cell: cell.to_string(),
                    })
                }
            }
        }
        row_labels.push(label);
    }
    let values = DMatrix::from_row_slice(row_labels.len(), col_labels.len(), &cells);
    Ok(RawTable {
        values,
        row_labels,
        col_labels,
    })
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    CliError::parse(line, 1, e.to_string())
}

pub fn read_table(path: &Path) -> Result<RawTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&text).map_err(|e| e.in_file(path))
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("formatted float parses")
}

/// Shortest text that reads back as `round_sig(v)`.
pub fn format_number(v: f64) -> String {
    let r = round_sig(v);
    let a = r.abs();
    if r != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// A CSV document of labelled rows.
pub fn render_table<S: AsRef<str>>(corner: &str, header: &[S], labels: &[S], values: &DMatrix<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let head: Vec<&str> = std::iter::once(corner).chain(header.iter().map(AsRef::as_ref)).collect();
    w.write_record(&head).expect("in-memory write");
    for (i, label) in labels.iter().enumerate() {
        let row: Vec<String> = std::iter::once(label.as_ref().to_string())
            .chain((0..values.ncols()).map(|k| format_number(values[(i, k)])))
            .collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf, CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(target)
}
