//! Binary one-vs-rest evaluation: ROC curves and AUC, threshold metrics,
//! specificity at fixed sensitivity, average precision, and the combined
//! two-task report.
//!
//! Tied scores are collapsed into a single ROC step, so the trapezoidal AUC is
//! exactly the Mann-Whitney statistic (ties count one half). Undefined metrics
//! (no positives, no negatives, empty input) are errors, never 0 or 1.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::calibration::{binarize_labels, task_scores, BinaryTask, MELANOMA_VS_REST, SK_VS_REST};
use crate::class::{ClassIndex, ProbVector};
use crate::dataset::GroundTruth;
use crate::error::{Error, Result};
use crate::fusion::FusionResult;

/// Default decision threshold for SE/SP/ACC.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Default sensitivity levels for the SP-at-SE cells.
pub const DEFAULT_SE_LEVELS: [f64; 3] = [0.82, 0.89, 0.95];

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Usage(format!("score {s} is not a number")));
    }
    Ok(())
}

/// Indices sorted by descending score, grouped into runs of equal scores.
fn descending_groups(scores: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((s, members)) if *s == scores[i] => members.push(i),
            _ => groups.push((scores[i], vec![i])),
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from a descending threshold sweep. Starts at (0,0) with an
/// infinite threshold and ends at (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    thresholds: Vec<f64>,
    // cumulative (fp, tp) counts behind each point
    counts: Vec<(u64, u64)>,
    positives: u64,
    negatives: u64,
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    check_inputs(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 {
        return Err(Error::undefined("roc", "no positive samples"));
    }
    if negatives == 0 {
        return Err(Error::undefined("roc", "no negative samples"));
    }
    let groups = descending_groups(scores);
    let mut curve = RocCurve {
        points: Vec::with_capacity(groups.len() + 1),
        thresholds: Vec::with_capacity(groups.len() + 1),
        counts: Vec::with_capacity(groups.len() + 1),
        positives,
        negatives,
    };
    curve.push(f64::INFINITY, 0, 0);
    let (mut fp, mut tp) = (0u64, 0u64);
    for (score, members) in groups {
        for i in members {
            if labels[i] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        curve.push(score, fp, tp);
    }
    Ok(curve)
}

impl RocCurve {
    fn push(&mut self, threshold: f64, fp: u64, tp: u64) {
        self.points.push(RocPoint {
            fpr: fp as f64 / self.negatives as f64,
            tpr: tp as f64 / self.positives as f64,
        });
        self.thresholds.push(threshold);
        self.counts.push((fp, tp));
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// Score cutoff for each point (`score >= threshold` is positive).
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn negatives(&self) -> u64 {
        self.negatives
    }

    /// Trapezoidal area, accumulated on integer counts and divided once.
    pub fn auc(&self) -> f64 {
        let mut twice_area: u128 = 0;
        for w in self.counts.windows(2) {
            let (fp0, tp0) = w[0];
            let (fp1, tp1) = w[1];
            twice_area += u128::from(fp1 - fp0) * u128::from(tp0 + tp1);
        }
        twice_area as f64 / (2.0 * self.positives as f64 * self.negatives as f64)
    }

    /// Best specificity among achieved operating points with `tpr >= level`.
    /// No interpolation between points.
    pub fn specificity_at_sensitivity(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::Usage(format!(
                "sensitivity level must be in (0, 1], got {level}"
            )));
        }
        let min_fpr = self
            .points
            .iter()
            .filter(|p| p.tpr >= level)
            .map(|p| p.fpr)
            .fold(1.0, f64::min);
        Ok(1.0 - min_fpr)
    }
}

pub fn auc(curve: &RocCurve) -> f64 {
    curve.auc()
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    roc_curve(scores, labels).map(|c| c.auc())
}

pub fn specificity_at_sensitivity(curve: &RocCurve, level: f64) -> Result<f64> {
    curve.specificity_at_sensitivity(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

/// Counts with the rule `score >= threshold` predicts positive.
pub fn confusion_at_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion> {
    check_inputs(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::undefined("accuracy", "no samples")),
            n => Ok((self.true_pos + self.true_neg) as f64 / n as f64),
        }
    }

    pub fn sensitivity(&self) -> Result<f64> {
        match self.true_pos + self.false_neg {
            0 => Err(Error::undefined("sensitivity", "no positive samples")),
            p => Ok(self.true_pos as f64 / p as f64),
        }
    }

    pub fn specificity(&self) -> Result<f64> {
        match self.true_neg + self.false_pos {
            0 => Err(Error::undefined("specificity", "no negative samples")),
            n => Ok(self.true_neg as f64 / n as f64),
        }
    }

    pub fn top1_error(&self) -> Result<f64> {
        self.accuracy().map(|a| 1.0 - a)
    }
}

/// Step-wise average precision: sum of `(R_k - R_{k-1}) * P_k` over distinct
/// score cutoffs in descending order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::undefined("average_precision", "no positive samples"));
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for (_, members) in descending_groups(scores) {
        let new_tp = members.iter().filter(|&&i| labels[i]).count();
        tp += new_tp;
        seen += members.len();
        if new_tp > 0 {
            ap += (new_tp as f64 / positives as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

/// Challenge ranking score: mean of the melanoma and SK AUCs.
pub fn overall_score(melanoma_auc: f64, sk_auc: f64) -> f64 {
    (melanoma_auc + sk_auc) / 2.0
}

/// Fraction of `predicted` equal to `truth`.
pub fn multiclass_accuracy(predicted: &[ClassIndex], truth: &[ClassIndex]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Usage(format!(
            "{} predictions but {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::undefined("accuracy", "no samples"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub threshold: f64,
    pub se_levels: Vec<f64>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            threshold: DEFAULT_THRESHOLD,
            se_levels: DEFAULT_SE_LEVELS.to_vec(),
        }
    }
}

/// One column of the report (one task, or the average of both).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskMetrics {
    pub acc: f64,
    pub auc: f64,
    pub ap: f64,
    pub se: f64,
    pub sp: f64,
    /// Specificity at each configured sensitivity level, same order.
    pub sp_at_se: Vec<f64>,
}

impl TaskMetrics {
    fn mean(a: &TaskMetrics, b: &TaskMetrics) -> TaskMetrics {
        let m = |x: f64, y: f64| (x + y) / 2.0;
        TaskMetrics {
            acc: m(a.acc, b.acc),
            auc: m(a.auc, b.auc),
            ap: m(a.ap, b.ap),
            se: m(a.se, b.se),
            sp: m(a.sp, b.sp),
            sp_at_se: a.sp_at_se.iter().zip(&b.sp_at_se).map(|(&x, &y)| m(x, y)).collect(),
        }
    }
}

/// Cell tag for a sensitivity level, e.g. 0.82 -> `SP82`.
pub fn sp_level_tag(level: f64) -> String {
    format!("SP{}", (level * 100.0 + 0.5) as u32)
}

type CellValue = fn(&TaskMetrics) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub se_levels: Vec<f64>,
    pub melanoma: TaskMetrics,
    pub sk: TaskMetrics,
    pub average: TaskMetrics,
}

impl MetricReport {
    /// Named cells in table order: per metric row, `AVG_`, `M_`, `SK_`.
    pub fn cells(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<(String, CellValue)> = vec![
            ("ACC".into(), |t| t.acc),
            ("AUC".into(), |t| t.auc),
            ("AP".into(), |t| t.ap),
            ("SE".into(), |t| t.se),
        ];
        let mut out = Vec::new();
        let columns = [("AVG", &self.average), ("M", &self.melanoma), ("SK", &self.sk)];
        for (name, get) in rows.drain(..) {
            for (prefix, t) in columns {
                out.push((format!("{prefix}_{name}"), get(t)));
            }
        }
        for (k, &level) in self.se_levels.iter().enumerate() {
            let tag = sp_level_tag(level);
            for (prefix, t) in columns {
                out.push((format!("{prefix}_{tag}"), t.sp_at_se[k]));
            }
        }
        for (prefix, t) in columns {
            out.push((format!("{prefix}_SP"), t.sp));
        }
        out
    }

    pub fn overall_score(&self) -> f64 {
        overall_score(self.melanoma.auc, self.sk.auc)
    }
}

fn task_metrics(
    scores: &[f64],
    labels: &[bool],
    config: &ReportConfig,
    prefix: &str,
) -> Result<TaskMetrics> {
    let cell = |name: &str| format!("{prefix}_{name}");
    let confusion = confusion_at_threshold(scores, labels, config.threshold)?;
    let curve = roc_curve(scores, labels).map_err(|e| e.context(cell("AUC")))?;
    let sp_at_se = config
        .se_levels
        .iter()
        .map(|&l| {
            curve
                .specificity_at_sensitivity(l)
                .map_err(|e| e.context(cell(&sp_level_tag(l))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskMetrics {
        acc: confusion.accuracy().map_err(|e| e.context(cell("ACC")))?,
        auc: curve.auc(),
        ap: average_precision(scores, labels).map_err(|e| e.context(cell("AP")))?,
        se: confusion.sensitivity().map_err(|e| e.context(cell("SE")))?,
        sp: confusion.specificity().map_err(|e| e.context(cell("SP")))?,
        sp_at_se,
    })
}

fn task_column(
    rows: &[&ProbVector],
    labels: &[ClassIndex],
    task: BinaryTask,
    config: &ReportConfig,
    prefix: &str,
) -> Result<TaskMetrics> {
    let scores = task_scores(rows, task)?;
    let binary = binarize_labels(labels, task);
    task_metrics(&scores, &binary, config, prefix)
}

/// Both binary tasks and their averages. Each task scores an image by the
/// per-class score of its positive class.
pub fn full_report(
    scores: &[&ProbVector],
    labels: &[ClassIndex],
    config: &ReportConfig,
) -> Result<MetricReport> {
    if scores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} score rows but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let melanoma = task_column(scores, labels, MELANOMA_VS_REST, config, "M")?;
    let sk = task_column(scores, labels, SK_VS_REST, config, "SK")?;
    let average = TaskMetrics::mean(&melanoma, &sk);
    Ok(MetricReport {
        se_levels: config.se_levels.clone(),
        melanoma,
        sk,
        average,
    })
}

/// Report over fusion results given in the row order of `truth`.
pub fn full_report_from_fusion(
    fused: &[FusionResult],
    truth: &GroundTruth,
    config: &ReportConfig,
) -> Result<MetricReport> {
    let rows: Vec<&ProbVector> = fused.iter().map(|r| &r.fused_scores).collect();
    full_report(&rows, truth.labels(), config)
}
