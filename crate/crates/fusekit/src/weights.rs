//! Weight files: `classifier_id,weight`. Weights are written in shortest
//! round-trip form, so write-then-parse is exact.

use std::path::Path;

use fusekit_core::WeightTable;

use crate::error::{FormatError, Result};
use crate::text::{csv_lines, parse_f64, parse_table, read_file, write_file};

pub const WEIGHT_HEADER: [&str; 2] = ["classifier_id", "weight"];

pub fn parse_weights_text(path: &Path, text: &str) -> Result<WeightTable> {
    let (_, table) = parse_table(path, text, &[&WEIGHT_HEADER])?;
    let entries = table
        .rows
        .into_iter()
        .map(|(line, f)| parse_f64(path, line, "weight", &f[1]).map(|w| (f[0].clone(), w)))
        .collect::<Result<Vec<_>>>()?;
    WeightTable::new(entries).map_err(|e| FormatError::parse(path, 0, e.to_string()))
}

pub fn parse_weights(path: &Path) -> Result<WeightTable> {
    parse_weights_text(path, &read_file(path)?)
}

pub fn format_weights(table: &WeightTable) -> String {
    csv_lines(
        &WEIGHT_HEADER,
        table.iter().map(|(id, w)| [id.to_string(), w.to_string()]),
    )
}

pub fn write_weights(path: &Path, table: &WeightTable) -> Result<()> {
    write_file(path, &format_weights(table))
}
