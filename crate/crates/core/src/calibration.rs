//! Voting weights from validation predictions.
//!
//! A classifier's weight is the mean of its two one-vs-rest AUCs
//! (melanoma vs rest, seborrheic keratosis vs rest). Each task scores an
//! image by the raw softmax column of its positive class. Weights are not
//! renormalized across classifiers.

use alloc::format;
use alloc::vec::Vec;

use crate::class::{ClassIndex, ProbVector};
use crate::dataset::{GroundTruth, PredictionSet};
use crate::error::{Error, Result};
use crate::fusion::WeightTable;
use crate::metrics::roc_auc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryTask {
    pub positive_class: ClassIndex,
    pub name: &'static str,
}

pub const MELANOMA_VS_REST: BinaryTask = BinaryTask {
    positive_class: ClassIndex::MELANOMA,
    name: "melanoma-vs-rest",
};

pub const SK_VS_REST: BinaryTask = BinaryTask {
    positive_class: ClassIndex::SEBORRHEIC_KERATOSIS,
    name: "sk-vs-rest",
};

/// The two binary tasks of the three-class protocol.
pub const PROTOCOL_TASKS: [BinaryTask; 2] = [MELANOMA_VS_REST, SK_VS_REST];

pub fn binarize(truth: &GroundTruth, task: BinaryTask) -> Vec<bool> {
    binarize_labels(truth.labels(), task)
}

pub fn binarize_labels(labels: &[ClassIndex], task: BinaryTask) -> Vec<bool> {
    labels.iter().map(|&l| l == task.positive_class).collect()
}

/// Score column of the task's positive class.
pub fn task_scores(rows: &[&ProbVector], task: BinaryTask) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            ClassIndex::checked(task.positive_class.value(), r.len()).map(|c| r.get(c))
        })
        .collect()
}

pub fn classifier_weight(preds: &PredictionSet, truth: &GroundTruth) -> Result<f64> {
    let rows = preds.aligned_rows(truth.image_ids())?;
    let mut total = 0.0;
    for task in PROTOCOL_TASKS {
        let scores = task_scores(&rows, task)?;
        let labels = binarize(truth, task);
        total += roc_auc(&scores, &labels).map_err(|e| e.context(task.name))?;
    }
    Ok(total / PROTOCOL_TASKS.len() as f64)
}

/// One weight per prediction set, in input order.
pub fn calibrate_weights(sets: &[PredictionSet], truth: &GroundTruth) -> Result<WeightTable> {
    if sets.is_empty() {
        return Err(Error::Usage("no prediction sets to calibrate".into()));
    }
    let entries = sets
        .iter()
        .map(|s| {
            classifier_weight(s, truth)
                .map(|w| (s.classifier_id().into(), w))
                .map_err(|e| e.context(format!("classifier `{}`", s.classifier_id())))
        })
        .collect::<Result<Vec<_>>>()?;
    WeightTable::new(entries)
}
