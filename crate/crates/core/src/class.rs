use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Number of classes in the dermoscopy protocol.
pub const DEFAULT_CLASSES: usize = 3;

/// Absolute tolerance on `|sum(probs) - 1|`. Rows outside it are rejected.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

const CLASS_NAMES: [&str; 3] = ["melanoma", "nevus", "seborrheic_keratosis"];

/// Class label. In the three-class protocol 0 = melanoma, 1 = nevus,
/// 2 = seborrheic keratosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassIndex(usize);

impl ClassIndex {
    pub const MELANOMA: ClassIndex = ClassIndex(0);
    pub const NEVUS: ClassIndex = ClassIndex(1);
    pub const SEBORRHEIC_KERATOSIS: ClassIndex = ClassIndex(2);

    pub const fn new(value: usize) -> Self {
        ClassIndex(value)
    }

    pub fn checked(value: usize, classes: usize) -> Result<Self> {
        if value < classes {
            Ok(ClassIndex(value))
        } else {
            Err(Error::ClassOutOfRange {
                index: value,
                classes,
            })
        }
    }

    pub const fn value(self) -> usize {
        self.0
    }

    /// Protocol name for indices 0..3.
    pub fn name(self) -> Option<&'static str> {
        CLASS_NAMES.get(self.0).copied()
    }

    /// Accepts the protocol names (`melanoma`, `nevus`, `seborrheic_keratosis`,
    /// plus the short `sk`) or a bare integer.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some(pos) = CLASS_NAMES.iter().position(|n| n.eq_ignore_ascii_case(s)) {
            return Some(ClassIndex(pos));
        }
        if s.eq_ignore_ascii_case("sk") {
            return Some(Self::SEBORRHEIC_KERATOSIS);
        }
        s.parse::<usize>().ok().map(ClassIndex)
    }
}

impl fmt::Display for ClassIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => f.write_str(name),
            None => write!(f, "{}", self.0),
        }
    }
}

/// One classifier's softmax output for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Usage(format!(
                "probability vector needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidProbVector {
                    index,
                    reason: format!("{p} is not finite"),
                });
            }
            if p < 0.0 {
                return Err(Error::InvalidProbVector {
                    index,
                    reason: format!("{p} is negative"),
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::ProbVectorSum {
                sum,
                tolerance: PROB_SUM_TOLERANCE,
            });
        }
        Ok(ProbVector { probs })
    }

    pub fn uniform(classes: usize) -> Self {
        ProbVector {
            probs: vec![1.0 / classes as f64; classes],
        }
    }

    /// Divides non-negative masses by their total.
    pub fn normalize(mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::Degenerate(format!(
                "cannot normalize mass with total {total}"
            )));
        }
        ProbVector::new(mass.into_iter().map(|m| m / total).collect())
    }

    pub fn one_hot(class: ClassIndex, classes: usize) -> Result<Self> {
        let class = ClassIndex::checked(class.value(), classes)?;
        let mut probs = vec![0.0; classes];
        probs[class.value()] = 1.0;
        Ok(ProbVector { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, class: ClassIndex) -> f64 {
        self.probs[class.value()]
    }

    /// Index of the largest entry; exact ties go to the smallest index.
    pub fn argmax(&self) -> ClassIndex {
        ClassIndex(argmax_first(&self.probs))
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}
