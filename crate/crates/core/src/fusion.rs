//! Majority-vote fusion of softmax outputs.
//!
//! Every classifier casts one vote: its top class `C_i` with confidence
//! `Pmax_i = max_j p_ij`. The weighted rule picks
//!
//! ```text
//! FC = argmax_j  sum_{i : C_i = j} w_i * Pmax_i
//! ```
//!
//! Ties anywhere (within a row, in class sums, in vote counts) go to the
//! smallest class index.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::class::{argmax_first, ClassIndex, ProbVector};
use crate::dataset::{join_positions, PredictionSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub class: ClassIndex,
    pub confidence: f64,
}

/// Top class and its confidence.
pub fn top_confidence(probs: &ProbVector) -> Vote {
    let class = probs.argmax();
    Vote {
        class,
        confidence: probs.get(class),
    }
}

/// Result of an unweighted vote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MajorityOutcome {
    Class(ClassIndex),
    /// Two or more classes share the maximal count (ascending order).
    Tie(Vec<ClassIndex>),
}

impl MajorityOutcome {
    pub fn class(&self) -> Option<ClassIndex> {
        match self {
            MajorityOutcome::Class(c) => Some(*c),
            MajorityOutcome::Tie(_) => None,
        }
    }
}

pub fn plain_majority_vote(votes: &[Vote]) -> Result<MajorityOutcome> {
    let Some(top) = votes.iter().map(|v| v.class.value()).max() else {
        return Err(Error::Usage("plain majority vote over an empty vote list".into()));
    };
    let mut counts = vec![0usize; top + 1];
    for v in votes {
        counts[v.class.value()] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    let leaders: Vec<ClassIndex> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == best)
        .map(|(j, _)| ClassIndex::new(j))
        .collect();
    if leaders.len() == 1 {
        Ok(MajorityOutcome::Class(leaders[0]))
    } else {
        Ok(MajorityOutcome::Tie(leaders))
    }
}

/// Per-classifier voting weights `w_i`, in classifier order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    ids: Vec<String>,
    weights: Vec<f64>,
}

impl WeightTable {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Usage("weight table is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for (id, w) in &entries {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()).context("weight table"));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Usage(format!(
                    "weight for `{id}` must be finite and non-negative, got {w}"
                )));
            }
        }
        if entries.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::Degenerate("every weight is zero".into()));
        }
        let (ids, weights) = entries.into_iter().unzip();
        Ok(WeightTable { ids, weights })
    }

    /// Weight 1 for every id.
    pub fn uniform<S: Into<String>>(ids: impl IntoIterator<Item = S>) -> Result<Self> {
        WeightTable::new(ids.into_iter().map(|id| (id.into(), 1.0)).collect())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|x| x == id).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids.iter().map(String::as_str).zip(self.weights.iter().copied())
    }

    /// Weights reordered to follow `classifier_ids`. Every id must be present;
    /// table entries not requested are ignored.
    pub fn aligned_to<S: AsRef<str>>(&self, classifier_ids: &[S]) -> Result<Vec<f64>> {
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(classifier_ids.len());
        for id in classifier_ids {
            match self.get(id.as_ref()) {
                Some(w) => out.push(w),
                None => missing.push(String::from(id.as_ref())),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(Error::Alignment {
                missing,
                extra: Vec::new(),
            }
            .context("weight table"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub final_class: ClassIndex,
    /// Weighted vote mass per class.
    pub class_sums: Vec<f64>,
    /// `class_sums` normalized to sum 1 (uniform when the total is zero).
    pub fused_scores: ProbVector,
    /// Set when the total vote mass was zero and `fused_scores` is uniform.
    pub degenerate: bool,
}

fn check_weights(weights: &[f64], voters: usize) -> Result<()> {
    if voters == 0 {
        return Err(Error::Usage("weighted vote over an empty vote list".into()));
    }
    if weights.len() != voters {
        return Err(Error::Usage(format!(
            "{voters} voters but {} weights",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::Usage(format!("invalid weight {w}")));
    }
    Ok(())
}

/// Confidence-weighted majority vote over `classes` classes.
pub fn weighted_vote(votes: &[Vote], weights: &[f64], classes: usize) -> Result<FusionResult> {
    check_weights(weights, votes.len())?;
    let mut class_sums = vec![0.0; classes];
    for (vote, &w) in votes.iter().zip(weights) {
        let j = ClassIndex::checked(vote.class.value(), classes)?.value();
        class_sums[j] += w * vote.confidence;
    }
    let total: f64 = class_sums.iter().sum();
    if total == 0.0 {
        if weights.iter().all(|&w| w == 0.0) && votes.iter().all(|v| v.confidence == 0.0) {
            return Err(Error::Degenerate(
                "all weights and all confidences are zero".into(),
            ));
        }
        return Ok(FusionResult {
            final_class: ClassIndex::new(0),
            class_sums,
            fused_scores: ProbVector::uniform(classes),
            degenerate: true,
        });
    }
    let final_class = ClassIndex::new(argmax_first(&class_sums));
    let fused_scores = ProbVector::normalize(class_sums.clone())?;
    Ok(FusionResult {
        final_class,
        class_sums,
        fused_scores,
        degenerate: false,
    })
}

/// Normalized weighted average of full softmax rows (not vote-restricted).
pub fn fused_scores_full(rows: &[&ProbVector], weights: &[f64]) -> Result<ProbVector> {
    check_weights(weights, rows.len())?;
    let classes = rows[0].len();
    let mut mass = vec![0.0; classes];
    for (row, &w) in rows.iter().zip(weights) {
        if row.len() != classes {
            return Err(Error::Usage(format!(
                "rows have {} and {} classes",
                classes,
                row.len()
            )));
        }
        for (m, &p) in mass.iter_mut().zip(row.as_slice()) {
            *m += w * p;
        }
    }
    ProbVector::normalize(mass)
}

/// Which continuous per-class score accompanies each fused decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// Normalized weighted vote mass (`FusionResult::fused_scores`).
    #[default]
    VoteRestricted,
    /// Normalized weighted average of every softmax row.
    FullAverage,
}

/// How the final label is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionRule {
    #[default]
    Weighted,
    /// Plain majority; a tie falls back to the weighted vote.
    PlainWithFallback,
}

/// Fused output over a batch of images.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedBatch {
    pub image_ids: Vec<String>,
    pub results: Vec<FusionResult>,
    /// Final label per image under the requested [`DecisionRule`].
    pub decisions: Vec<ClassIndex>,
    /// Per-class score per image under the requested [`ScoreMode`].
    pub scores: Vec<ProbVector>,
    /// Number of images where the plain vote tied.
    pub plain_ties: usize,
}

/// Reorders every set onto the image order of the first one, after checking
/// that all sets have the same row count.
fn aligned_matrix(sets: &[PredictionSet]) -> Result<(usize, Vec<Vec<&ProbVector>>)> {
    let Some(first) = sets.first() else {
        return Err(Error::Usage("no prediction sets to fuse".into()));
    };
    for other in &sets[1..] {
        if other.len() != first.len() {
            return Err(Error::RowCountMismatch {
                first: first.classifier_id().into(),
                first_rows: first.len(),
                second: other.classifier_id().into(),
                second_rows: other.len(),
            });
        }
    }
    let mut columns = Vec::with_capacity(sets.len());
    for set in sets {
        let positions = join_positions(set.image_ids(), first.image_ids())
            .map_err(|e| e.context(format!("classifier `{}`", set.classifier_id())))?;
        columns.push(positions.into_iter().map(|i| &set.rows()[i]).collect::<Vec<_>>());
    }
    let classes = first.classes().unwrap_or(crate::DEFAULT_CLASSES);
    for (set, column) in sets.iter().zip(&columns) {
        if let Some(row) = column.iter().find(|r| r.len() != classes) {
            return Err(Error::Usage(format!(
                "classifier `{}` has {} classes, expected {classes}",
                set.classifier_id(),
                row.len()
            )));
        }
    }
    Ok((classes, columns))
}

/// Weighted vote applied row by row. `weights` follows the order of `sets`;
/// rows are matched by image id against the first set.
pub fn fuse_batch(sets: &[PredictionSet], weights: &[f64]) -> Result<Vec<FusionResult>> {
    Ok(fuse_batch_with(sets, weights, ScoreMode::VoteRestricted, DecisionRule::Weighted)?.results)
}

pub fn fuse_batch_with(
    sets: &[PredictionSet],
    weights: &[f64],
    mode: ScoreMode,
    rule: DecisionRule,
) -> Result<FusedBatch> {
    let (classes, columns) = aligned_matrix(sets)?;
    check_weights(weights, sets.len())?;
    let n = sets[0].len();
    let mut batch = FusedBatch {
        image_ids: sets[0].image_ids().to_vec(),
        results: Vec::with_capacity(n),
        decisions: Vec::with_capacity(n),
        scores: Vec::with_capacity(n),
        plain_ties: 0,
    };
    let mut votes = Vec::with_capacity(sets.len());
    let mut rows = Vec::with_capacity(sets.len());
    for r in 0..n {
        votes.clear();
        rows.clear();
        for column in &columns {
            rows.push(column[r]);
            votes.push(top_confidence(column[r]));
        }
        let result = weighted_vote(&votes, weights, classes)
            .map_err(|e| e.context(format!("image `{}`", batch.image_ids[r])))?;
        let decision = match rule {
            DecisionRule::Weighted => result.final_class,
            DecisionRule::PlainWithFallback => match plain_majority_vote(&votes)? {
                MajorityOutcome::Class(c) => c,
                MajorityOutcome::Tie(_) => {
                    batch.plain_ties += 1;
                    result.final_class
                }
            },
        };
        let scores = match mode {
            ScoreMode::VoteRestricted => result.fused_scores.clone(),
            ScoreMode::FullAverage => fused_scores_full(&rows, weights)?,
        };
        batch.decisions.push(decision);
        batch.scores.push(scores);
        batch.results.push(result);
    }
    Ok(batch)
}
