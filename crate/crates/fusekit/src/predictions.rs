//! Prediction files: one softmax row per image.
//!
//! ```text
//! # classifier: googlenet
//! image_id,p_melanoma,p_nevus,p_sk
//! ISIC_0012086,0.12,0.81,0.07
//! ```
//!
//! The comment line is optional; without it the classifier id is the file
//! stem. Fused files add a trailing `label` column with the ensemble decision.

use std::collections::HashSet;
use std::path::Path;

use fusekit_core::{ClassIndex, PredictionSet, ProbVector};

use crate::error::{FormatError, Result};
use crate::text::{csv_lines, parse_f64, parse_table, read_file, write_file};

pub const PREDICTION_HEADER: [&str; 4] = ["image_id", "p_melanoma", "p_nevus", "p_sk"];
pub const FUSED_HEADER: [&str; 5] = ["image_id", "p_melanoma", "p_nevus", "p_sk", "label"];
const CLASSIFIER_TAG: &str = "classifier:";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub set: PredictionSet,
    /// Present for fused files.
    pub decisions: Option<Vec<ClassIndex>>,
}

pub fn parse_predictions(path: &Path) -> Result<PredictionSet> {
    read_prediction_file(path).map(|f| f.set)
}

pub fn read_prediction_file(path: &Path) -> Result<PredictionFile> {
    let text = read_file(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_prediction_text(path, &text, &stem)
}

pub fn parse_prediction_text(path: &Path, text: &str, default_id: &str) -> Result<PredictionFile> {
    let (which, table) = parse_table(path, text, &[&PREDICTION_HEADER, &FUSED_HEADER])?;
    let classifier_id = table
        .comments
        .iter()
        .find_map(|c| c.strip_prefix(CLASSIFIER_TAG))
        .map(|id| id.trim().to_string())
        .unwrap_or_else(|| default_id.to_string());
    let fused = which == 1;
    let mut ids = Vec::with_capacity(table.rows.len());
    let mut rows = Vec::with_capacity(table.rows.len());
    let mut decisions = Vec::new();
    let mut seen = HashSet::new();
    for (line, fields) in table.rows {
        let id = fields[0].clone();
        if id.is_empty() {
            return Err(FormatError::parse(path, line, "empty image_id"));
        }
        if !seen.insert(id.clone()) {
            return Err(FormatError::parse(path, line, format!("duplicate image_id `{id}`")));
        }
        let probs = PREDICTION_HEADER[1..]
            .iter()
            .zip(&fields[1..4])
            .map(|(col, cell)| parse_f64(path, line, col, cell))
            .collect::<Result<Vec<_>>>()?;
        let row = ProbVector::new(probs).map_err(|e| FormatError::parse(path, line, e.to_string()))?;
        if fused {
            let label = ClassIndex::parse(&fields[4])
                .filter(|c| c.value() < 3)
                .ok_or_else(|| FormatError::parse(path, line, format!("unknown label `{}`", fields[4])))?;
            decisions.push(label);
        }
        ids.push(id);
        rows.push(row);
    }
    Ok(PredictionFile {
        set: PredictionSet::new(classifier_id, ids, rows)?,
        decisions: fused.then_some(decisions),
    })
}

pub fn format_predictions(file: &PredictionFile) -> Result<String> {
    let set = &file.set;
    if let Some(k) = set.classes().filter(|&k| k != 3) {
        return Err(fusekit_core::Error::Usage(format!(
            "prediction files carry 3 classes, set `{}` has {k}",
            set.classifier_id()
        ))
        .into());
    }
    let header: &[&str] = if file.decisions.is_some() { &FUSED_HEADER } else { &PREDICTION_HEADER };
    let body = csv_lines(
        header,
        set.image_ids().iter().zip(set.rows()).enumerate().map(|(n, (id, row))| {
            let mut fields = vec![id.clone()];
            fields.extend(row.as_slice().iter().map(|p| p.to_string()));
            if let Some(d) = &file.decisions {
                fields.push(d[n].to_string());
            }
            fields
        }),
    );
    Ok(format!("# {CLASSIFIER_TAG} {}\n{body}", set.classifier_id()))
}

pub fn write_prediction_file(path: &Path, file: &PredictionFile) -> Result<()> {
    write_file(path, &format_predictions(file)?)
}
