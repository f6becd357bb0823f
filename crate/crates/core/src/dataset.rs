use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::class::{ClassIndex, ProbVector};
use crate::error::{Error, Result};

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Ids synthesized for files that carry no image id column.
pub fn positional_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("row{i}")).collect()
}

/// Matches `ids` against `available`, returning the position of each requested
/// id, or an alignment error listing every discrepancy in both directions.
pub(crate) fn join_positions(available: &[String], ids: &[String]) -> Result<Vec<usize>> {
    let index: BTreeMap<&str, usize> = available
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut missing = Vec::new();
    let mut positions = Vec::with_capacity(ids.len());
    for id in ids {
        match index.get(id.as_str()) {
            Some(&i) => positions.push(i),
            None => missing.push(id.clone()),
        }
    }
    let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let extra: Vec<String> = available
        .iter()
        .filter(|id| !wanted.contains(id.as_str()))
        .cloned()
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(positions)
    } else {
        Err(Error::Alignment { missing, extra })
    }
}

/// One classifier's softmax outputs over a set of images.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    classifier_id: String,
    image_ids: Vec<String>,
    rows: Vec<ProbVector>,
}

impl PredictionSet {
    pub fn new(
        classifier_id: impl Into<String>,
        image_ids: Vec<String>,
        rows: Vec<ProbVector>,
    ) -> Result<Self> {
        let classifier_id = classifier_id.into();
        if image_ids.len() != rows.len() {
            return Err(Error::Usage(format!(
                "classifier `{classifier_id}`: {} image ids but {} rows",
                image_ids.len(),
                rows.len()
            )));
        }
        check_unique(&image_ids).map_err(|e| e.context(format!("classifier `{classifier_id}`")))?;
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().position(|r| r.len() != first.len()) {
                return Err(Error::Usage(format!(
                    "classifier `{classifier_id}`: row {bad} has {} classes, expected {}",
                    rows[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(PredictionSet {
            classifier_id,
            image_ids,
            rows,
        })
    }

    /// Builds a set whose image ids are synthesized from row numbers.
    pub fn positional(classifier_id: impl Into<String>, rows: Vec<ProbVector>) -> Result<Self> {
        let ids = positional_ids(rows.len());
        PredictionSet::new(classifier_id, ids, rows)
    }

    pub fn classifier_id(&self) -> &str {
        &self.classifier_id
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn rows(&self) -> &[ProbVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of classes per row, `None` for an empty set.
    pub fn classes(&self) -> Option<usize> {
        self.rows.first().map(ProbVector::len)
    }

    /// Rows reordered to follow `ids` (join by image id).
    pub fn aligned_rows(&self, ids: &[String]) -> Result<Vec<&ProbVector>> {
        let positions = join_positions(&self.image_ids, ids)
            .map_err(|e| e.context(format!("classifier `{}`", self.classifier_id)))?;
        Ok(positions.into_iter().map(|i| &self.rows[i]).collect())
    }
}

/// Reference labels keyed by image id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    image_ids: Vec<String>,
    labels: Vec<ClassIndex>,
}

impl GroundTruth {
    pub fn new(image_ids: Vec<String>, labels: Vec<ClassIndex>) -> Result<Self> {
        if image_ids.len() != labels.len() {
            return Err(Error::Usage(format!(
                "ground truth has {} ids but {} labels",
                image_ids.len(),
                labels.len()
            )));
        }
        check_unique(&image_ids).map_err(|e| e.context("ground truth"))?;
        Ok(GroundTruth { image_ids, labels })
    }

    pub fn positional(labels: Vec<ClassIndex>) -> Self {
        GroundTruth {
            image_ids: positional_ids(labels.len()),
            labels,
        }
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn labels(&self) -> &[ClassIndex] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels reordered to follow `ids`.
    pub fn aligned_labels(&self, ids: &[String]) -> Result<Vec<ClassIndex>> {
        let positions =
            join_positions(&self.image_ids, ids).map_err(|e| e.context("ground truth"))?;
        Ok(positions.into_iter().map(|i| self.labels[i]).collect())
    }

    pub fn label_of(&self, id: &str) -> Option<ClassIndex> {
        self.image_ids
            .iter()
            .position(|x| x == id)
            .map(|i| self.labels[i])
    }
}
