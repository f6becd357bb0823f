//! Shared CSV plumbing: leading `#` comment lines, exact headers and
//! file-relative line numbers.

use std::path::Path;

use crate::error::{FormatError, Result};

pub(crate) struct Table {
    pub comments: Vec<String>,
    /// (1-based file line, fields)
    pub rows: Vec<(u64, Vec<String>)>,
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| FormatError::io(path, e))
}

/// Parses `text`, requiring the header to be one of `headers`. Returns the
/// index of the matched header alongside the table.
pub(crate) fn parse_table(path: &Path, text: &str, headers: &[&[&str]]) -> Result<(usize, Table)> {
    let mut comments = Vec::new();
    let mut offset = 0u64;
    let mut body = text;
    while body.starts_with('#') {
        let end = body.find('\n').map_or(body.len(), |i| i + 1);
        comments.push(body[1..end].trim().to_string());
        body = &body[end..];
        offset += 1;
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FormatError::parse(path, offset + 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let Some(which) = headers
        .iter()
        .position(|h| h.len() == header.len() && h.iter().zip(&header).all(|(a, b)| a == b))
    else {
        return Err(FormatError::parse(
            path,
            offset + 1,
            format!("expected header `{}`, found `{}`", headers[0].join(","), header.join(",")),
        ));
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            FormatError::parse(path, offset + line, e.to_string())
        })?;
        let line = offset + record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok((which, Table { comments, rows }))
}

pub(crate) fn parse_f64(path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| FormatError::parse(path, line, format!("{column}: `{cell}` is not a number")))
}

/// Writes CSV rows with the csv crate's quoting rules.
pub(crate) fn csv_lines<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
