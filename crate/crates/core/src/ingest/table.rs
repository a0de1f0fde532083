//! Header-addressed CSV tables with a schema-version preamble.

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{IngestError, ValidationErrors, SCHEMA_VERSION};

pub(crate) struct Table {
    file: &'static str,
    columns: HashMap<String, usize>,
    pub(crate) rows: Vec<Row>,
}

pub(crate) struct Row {
    pub(crate) line: usize,
    fields: Vec<String>,
}

/// Borrowed view used while converting one row into a record.
pub(crate) struct Cells<'a> {
    table: &'a Table,
    row: &'a Row,
}

impl Table {
    /// Reads the preamble, the header and every data row. Rows with the
    /// wrong number of fields are reported and skipped.
    pub(crate) fn read<R: Read>(
        mut source: R,
        file: &'static str,
        required: &[&str],
    ) -> Result<(Table, ValidationErrors), ValidationErrors> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| IngestError::Unreadable { file: file.to_string(), reason: e.to_string() })?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

        let (first, rest) = match text.split_once('\n') {
            Some((a, b)) => (a, b),
            None => (text, ""),
        };
        check_preamble(first.trim_end_matches('\r'), file)?;

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(rest.as_bytes());
        let headers = reader.headers().map_err(|e| malformed(file, 2, e.to_string()))?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(malformed(file, 2, "missing header row".into()).into());
        }
        let columns: HashMap<String, usize> =
            headers.iter().enumerate().map(|(i, h)| (h.to_ascii_lowercase(), i)).collect();

        let missing: Vec<IngestError> = required
            .iter()
            .filter(|c| !columns.contains_key(**c))
            .map(|c| IngestError::MissingColumn { file: file.to_string(), column: c.to_string() })
            .collect();
        if !missing.is_empty() {
            return Err(ValidationErrors(missing));
        }

        let mut errors = ValidationErrors::default();
        let mut rows = Vec::new();
        for record in reader.records() {
            match record {
                Ok(record) => {
                    // +1 for the preamble line
                    let line = record.position().map_or(0, |p| p.line() as usize + 1);
                    if record.len() != headers.len() {
                        errors.0.push(malformed(
                            file,
                            line,
                            format!("expected {} columns, found {}", headers.len(), record.len()),
                        ));
                        continue;
                    }
                    rows.push(Row { line, fields: record.iter().map(str::to_string).collect() });
                }
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize + 1);
                    errors.0.push(malformed(file, line, e.to_string()));
                }
            }
        }
        Ok((Table { file, columns, rows }, errors))
    }

    pub(crate) fn cells<'a>(&'a self, row: &'a Row) -> Cells<'a> {
        Cells { table: self, row }
    }
}

fn check_preamble(first: &str, file: &'static str) -> Result<(), IngestError> {
    let missing = || IngestError::MissingSchemaVersion { file: file.to_string() };
    let body = first.trim().strip_prefix('#').ok_or_else(missing)?;
    let (key, value) = body.split_once(':').ok_or_else(missing)?;
    if !key.trim().eq_ignore_ascii_case("schema_version") {
        return Err(missing());
    }
    let value = value.trim();
    if value != SCHEMA_VERSION.to_string() {
        return Err(IngestError::UnsupportedSchemaVersion { file: file.to_string(), found: value.to_string() });
    }
    Ok(())
}

pub(crate) fn malformed(file: &str, line: usize, reason: String) -> IngestError {
    IngestError::MalformedRow { file: file.to_string(), line, reason }
}

impl<'a> Cells<'a> {
    pub(crate) fn line(&self) -> usize {
        self.row.line
    }

    /// Raw cell text; `None` when the column is absent from the header.
    pub(crate) fn get(&self, column: &str) -> Option<&'a str> {
        self.table.columns.get(column).map(|&i| self.row.fields[i].as_str())
    }

    pub(crate) fn text(&self, column: &str) -> Result<String, IngestError> {
        let value = self.get(column).unwrap_or_default();
        if value.is_empty() {
            return Err(self.malformed(format!("empty `{column}`")));
        }
        Ok(value.to_string())
    }

    pub(crate) fn malformed(&self, reason: String) -> IngestError {
        malformed(self.table.file, self.row.line, reason)
    }

    pub(crate) fn range(&self, field: &str, value: impl ToString, expected: &'static str) -> IngestError {
        IngestError::RangeError {
            file: self.table.file.to_string(),
            line: self.row.line,
            field: field.to_string(),
            value: value.to_string(),
            expected,
        }
    }

    /// A finite real in integer, decimal or scientific notation.
    pub(crate) fn real(&self, column: &str) -> Result<f64, IngestError> {
        let raw = self.get(column).unwrap_or_default();
        parse_real(raw).ok_or_else(|| self.malformed(format!("`{column}` is not a number: {raw:?}")))
    }

    pub(crate) fn non_negative(&self, column: &str) -> Result<f64, IngestError> {
        let v = self.real(column)?;
        if v < 0.0 {
            return Err(self.range(column, v, ">= 0"));
        }
        Ok(v + 0.0)
    }

    /// Like [`Cells::non_negative`] but an absent column or empty cell reads as zero.
    pub(crate) fn optional_non_negative(&self, column: &str) -> Result<f64, IngestError> {
        match self.get(column) {
            None | Some("") => Ok(0.0),
            Some(_) => self.non_negative(column),
        }
    }

    /// A byte counter: a non-negative whole number, possibly written as `1e12`.
    pub(crate) fn count(&self, column: &str) -> Result<u64, IngestError> {
        let raw = self.get(column).unwrap_or_default();
        if let Ok(v) = raw.parse::<u64>() {
            return Ok(v);
        }
        let v = parse_real(raw).ok_or_else(|| self.malformed(format!("`{column}` is not a number: {raw:?}")))?;
        if v < 0.0 {
            return Err(self.range(column, raw, ">= 0"));
        }
        if v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(self.malformed(format!("`{column}` is not a whole byte count: {raw:?}")));
        }
        Ok(v as u64)
    }
}

pub(crate) fn parse_real(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    // reject inf/nan spellings that f64::from_str accepts
    if raw.is_empty() || raw.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes the schema preamble and returns a CSV writer positioned after it.
pub(crate) fn writer<W: Write>(mut sink: W) -> std::io::Result<csv::Writer<W>> {
    writeln!(sink, "# schema_version: {SCHEMA_VERSION}")?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink))
}
