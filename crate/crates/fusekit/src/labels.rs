//! Label files: `image_id,label`, with label given by name
//! (`melanoma`, `nevus`, `seborrheic_keratosis`) or index (0, 1, 2).

use std::collections::HashSet;
use std::path::Path;

use fusekit_core::{ClassIndex, GroundTruth};

use crate::error::{FormatError, Result};
use crate::text::{csv_lines, parse_table, read_file, write_file};

pub const LABEL_HEADER: [&str; 2] = ["image_id", "label"];

pub fn parse_labels_text(path: &Path, text: &str) -> Result<GroundTruth> {
    let (_, table) = parse_table(path, text, &[&LABEL_HEADER])?;
    let mut ids = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    let mut seen = HashSet::new();
    for (line, fields) in table.rows {
        let label = ClassIndex::parse(&fields[1])
            .filter(|c| c.value() < 3)
            .ok_or_else(|| FormatError::parse(path, line, format!("unknown label `{}`", fields[1])))?;
        if !seen.insert(fields[0].clone()) {
            return Err(FormatError::parse(path, line, format!("duplicate image_id `{}`", fields[0])));
        }
        ids.push(fields[0].clone());
        labels.push(label);
    }
    Ok(GroundTruth::new(ids, labels)?)
}

pub fn parse_labels(path: &Path) -> Result<GroundTruth> {
    parse_labels_text(path, &read_file(path)?)
}

pub fn format_labels(truth: &GroundTruth) -> String {
    csv_lines(
        &LABEL_HEADER,
        truth
            .image_ids()
            .iter()
            .zip(truth.labels())
            .map(|(id, l)| [id.clone(), l.to_string()]),
    )
}

pub fn write_labels(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_file(path, &format_labels(truth))
}
