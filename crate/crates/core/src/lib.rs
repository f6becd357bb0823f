//! Confidence-weighted majority-vote fusion of softmax classifiers, with the
//! evaluation protocol used for two-task (melanoma / seborrheic keratosis)
//! dermoscopy classification.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, image IO and the
//! command line live in the `fusekit` crate.
//!
//! Modules:
//! - [`fusion`]: top-confidence votes, plain and weighted majority voting.
//! - [`calibration`]: per-classifier weights from one-vs-rest AUCs.
//! - [`metrics`]: ROC/AUC, threshold metrics, SP-at-SE, average precision.
//! - [`augmentation`]: deterministic augmentation plans and pixel transforms.
//! - [`simulator`]: synthetic ensembles with tunable accuracy and correlation.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augmentation;
pub mod calibration;
mod class;
mod dataset;
mod error;
pub mod fusion;
pub mod metrics;
pub mod rng;
pub mod simulator;

pub use class::{ClassIndex, ProbVector, DEFAULT_CLASSES, PROB_SUM_TOLERANCE};
pub use dataset::{GroundTruth, PredictionSet};
pub use error::{Error, Result};
pub use fusion::{FusionResult, Vote, WeightTable};
