//! Synthetic ensembles with controllable per-classifier accuracy and
//! inter-classifier error correlation.
//!
//! Per image, a shared latent draw `(u, wrong class)` is made once. Each
//! classifier copies the latent draw with probability `correlation` and
//! otherwise draws its own; it is correct iff `u < accuracy`. A wrong vote goes
//! to a uniformly chosen wrong class. The softmax row puts mass around
//! `c / (c + K - 1)` on the voted class (kept above 1/2 so it stays the strict
//! argmax) and splits the rest randomly over the other classes.
//!
//! All draws are keyed by `(seed, image index, classifier)`, so the output does
//! not depend on generation order.

use alloc::format;
use alloc::vec::Vec;

use crate::calibration::calibrate_weights;
use crate::class::{ClassIndex, ProbVector};
use crate::dataset::{GroundTruth, PredictionSet};
use crate::error::{Error, Result};
use crate::fusion::{plain_majority_vote, top_confidence, weighted_vote, MajorityOutcome, Vote};
use crate::metrics::multiclass_accuracy;
use crate::rng::CounterRng;

/// Lowest mass placed on the voted class.
const MIN_TOP_MASS: f64 = 0.5 + 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_images: usize,
    pub n_classifiers: usize,
    pub accuracies: Vec<f64>,
    pub correlation: f64,
    pub concentration: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Independent classifiers with concentration 4.
    pub fn independent(n_images: usize, accuracies: Vec<f64>, seed: u64) -> Self {
        SimConfig {
            n_images,
            n_classifiers: accuracies.len(),
            accuracies,
            correlation: 0.0,
            concentration: 4.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classifiers == 0 {
            return Err(Error::Config("need at least one classifier".into()));
        }
        if self.accuracies.len() != self.n_classifiers {
            return Err(Error::Config(format!(
                "{} classifiers but {} accuracies",
                self.n_classifiers,
                self.accuracies.len()
            )));
        }
        if let Some(a) = self.accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("accuracy {a} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::Config(format!(
                "correlation {} outside [0, 1]",
                self.correlation
            )));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::Config(format!(
                "concentration must be positive, got {}",
                self.concentration
            )));
        }
        Ok(())
    }
}

/// Class frequencies of the 2,000-image training set (374 melanoma,
/// 1,372 nevus, 254 seborrheic keratosis).
pub fn training_distribution() -> ProbVector {
    ProbVector::new(alloc::vec![374.0 / 2000.0, 1372.0 / 2000.0, 254.0 / 2000.0])
        .expect("static distribution")
}

pub fn classifier_id(i: usize) -> alloc::string::String {
    format!("sim{i}")
}

pub fn image_id(n: usize) -> alloc::string::String {
    format!("img{n:06}")
}

fn draw_class(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding slack: last class with positive mass
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn wrong_class(truth: usize, pick: u64) -> usize {
    let pick = pick as usize;
    if pick < truth {
        pick
    } else {
        pick + 1
    }
}

fn softmax_row(rng: &CounterRng, top: usize, classes: usize, concentration: f64) -> Result<ProbVector> {
    let centre = concentration / (concentration + (classes - 1) as f64);
    let spread = 1.0 - centre;
    let mass = (centre + (rng.f64_at(0) - 0.5) * spread).clamp(MIN_TOP_MASS, 1.0);
    let rest = 1.0 - mass;
    let shares: Vec<f64> = (0..classes - 1).map(|k| 0.05 + rng.f64_at(1 + k as u64)).collect();
    let share_total: f64 = shares.iter().sum();
    let mut probs = Vec::with_capacity(classes);
    let mut k = 0;
    for j in 0..classes {
        if j == top {
            probs.push(mass);
        } else {
            probs.push(rest * shares[k] / share_total);
            k += 1;
        }
    }
    ProbVector::new(probs)
}

/// Draws ground truth and one prediction set per classifier.
pub fn synth_ensemble(
    config: &SimConfig,
    truth_distribution: &ProbVector,
) -> Result<(Vec<PredictionSet>, GroundTruth)> {
    config.validate()?;
    let classes = truth_distribution.len();
    let dist = truth_distribution.as_slice();
    let root = CounterRng::new(config.seed);
    let ids: Vec<_> = (0..config.n_images).map(image_id).collect();
    let mut labels = Vec::with_capacity(config.n_images);
    let mut rows: Vec<Vec<ProbVector>> = (0..config.n_classifiers)
        .map(|_| Vec::with_capacity(config.n_images))
        .collect();
    for n in 0..config.n_images {
        let image = root.derive(n as u64);
        let truth = draw_class(dist, image.f64_at(0));
        let shared_u = image.f64_at(1);
        let shared_wrong = wrong_class(truth, image.below(2, (classes - 1) as u64));
        labels.push(ClassIndex::new(truth));
        for (i, &accuracy) in config.accuracies.iter().enumerate() {
            let voter = image.derive(1 + i as u64);
            let copies = voter.f64_at(0) < config.correlation;
            let (u, wrong) = if copies {
                (shared_u, shared_wrong)
            } else {
                (voter.f64_at(1), wrong_class(truth, voter.below(2, (classes - 1) as u64)))
            };
            let top = if u < accuracy { truth } else { wrong };
            rows[i].push(softmax_row(&voter.derive(0), top, classes, config.concentration)?);
        }
    }
    let sets = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| PredictionSet::new(classifier_id(i), ids.clone(), r))
        .collect::<Result<Vec<_>>>()?;
    Ok((sets, GroundTruth::new(ids, labels)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightsMode {
    Uniform,
    /// Weights calibrated on an independently drawn set of the same size.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub individual_accuracies: Vec<f64>,
    /// Plain vote counted correct only when it names the true class outright.
    pub plain_vote_accuracy: f64,
    /// Plain vote with ties resolved by the weighted vote.
    pub plain_with_fallback_accuracy: f64,
    pub weighted_vote_accuracy: f64,
    pub tie_count: usize,
    pub weights: Vec<f64>,
}

/// Seed used for the held-out calibration draw.
pub fn calibration_seed(seed: u64) -> u64 {
    crate::rng::mix64(seed ^ 0xCA1B_0000_0000_0001)
}

pub fn ensemble_experiment(
    config: &SimConfig,
    truth_distribution: &ProbVector,
    mode: WeightsMode,
) -> Result<ExperimentSummary> {
    let (sets, truth) = synth_ensemble(config, truth_distribution)?;
    let weights = match mode {
        WeightsMode::Uniform => alloc::vec![1.0; sets.len()],
        WeightsMode::Calibrated => {
            let held_out = SimConfig {
                seed: calibration_seed(config.seed),
                ..config.clone()
            };
            let (cal_sets, cal_truth) = synth_ensemble(&held_out, truth_distribution)?;
            calibrate_weights(&cal_sets, &cal_truth)?.weights().to_vec()
        }
    };
    let classes = truth_distribution.len();
    let labels = truth.labels();
    let individual_accuracies = sets
        .iter()
        .map(|s| {
            let predicted: Vec<ClassIndex> = s.rows().iter().map(ProbVector::argmax).collect();
            multiclass_accuracy(&predicted, labels)
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut plain_hits, mut fallback_hits, mut weighted_hits, mut ties) = (0usize, 0usize, 0usize, 0usize);
    let mut votes: Vec<Vote> = Vec::with_capacity(sets.len());
    for (n, &label) in labels.iter().enumerate() {
        votes.clear();
        votes.extend(sets.iter().map(|s| top_confidence(&s.rows()[n])));
        let weighted = weighted_vote(&votes, &weights, classes)?.final_class;
        weighted_hits += usize::from(weighted == label);
        match plain_majority_vote(&votes)? {
            MajorityOutcome::Class(c) => {
                plain_hits += usize::from(c == label);
                fallback_hits += usize::from(c == label);
            }
            MajorityOutcome::Tie(_) => {
                ties += 1;
                fallback_hits += usize::from(weighted == label);
            }
        }
    }
    let n = labels.len().max(1) as f64;
    Ok(ExperimentSummary {
        individual_accuracies,
        plain_vote_accuracy: plain_hits as f64 / n,
        plain_with_fallback_accuracy: fallback_hits as f64 / n,
        weighted_vote_accuracy: weighted_hits as f64 / n,
        tie_count: ties,
        weights,
    })
}
