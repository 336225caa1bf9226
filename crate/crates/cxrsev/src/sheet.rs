//! Thin layer over `csv` that keeps line numbers attached to every record.

use csv::StringRecord;

use crate::error::{Error, Result};

pub(crate) struct Sheet {
    pub name: String,
    pub header: Vec<String>,
    /// (file line, record). The header is line 1.
    pub records: Vec<(u64, StringRecord)>,
}

impl Sheet {
    pub fn parse(bytes: &[u8], name: &str) -> Result<Sheet> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(bytes);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| record_error(name, &e))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(Error::Header {
                source_name: name.to_string(),
                message: "missing header row".into(),
            });
        }
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| record_error(name, &e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != header.len() {
                return Err(Error::Record {
                    source_name: name.to_string(),
                    line,
                    message: format!("{} fields, expected {}", rec.len(), header.len()),
                });
            }
            records.push((line, rec));
        }
        Ok(Sheet {
            name: name.to_string(),
            header,
            records,
        })
    }

    /// Checks that the header starts with exactly `expected`.
    pub fn expect_prefix(&self, expected: &[&str]) -> Result<()> {
        for (i, want) in expected.iter().enumerate() {
            match self.header.get(i) {
                Some(got) if got == want => {}
                Some(got) => {
                    return Err(self.header_error(format!(
                        "column {} is `{got}`, expected `{want}`",
                        i + 1
                    )))
                }
                None => return Err(self.header_error(format!("missing column `{want}`"))),
            }
        }
        Ok(())
    }

    pub fn header_error(&self, message: String) -> Error {
        Error::Header {
            source_name: self.name.clone(),
            message,
        }
    }

    pub fn cell_error(&self, index: usize, column: usize, message: String) -> Error {
        Error::Cell {
            source_name: self.name.clone(),
            line: self.records[index].0,
            row: index as u64 + 1,
            column: self.header[column].clone(),
            message,
        }
    }

    pub fn row_error(&self, index: usize, message: String) -> Error {
        Error::Record {
            source_name: self.name.clone(),
            line: self.records[index].0,
            message,
        }
    }
}

fn record_error(name: &str, e: &csv::Error) -> Error {
    Error::Record {
        source_name: name.to_string(),
        line: e.position().map_or(0, |p| p.line()),
        message: match e.kind() {
            csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
            _ => e.to_string(),
        },
    }
}

pub(crate) fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value `{s}`"))
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub(crate) fn write_error(name: &str, e: csv::Error) -> Error {
    Error::format(name, e.to_string())
}
