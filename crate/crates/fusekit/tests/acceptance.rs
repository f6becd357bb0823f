//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fusekit::predictions::{parse_prediction_text, write_prediction_file, PredictionFile};
use fusekit::report::{format_report, parse_report_text, ReportFile};
use fusekit::weights::{format_weights, parse_weights_text, write_weights};
use fusekit_core::augmentation::{apply, plan_from_counts, ImageBuffer, PlanOptions, TransformOp};
use fusekit_core::fusion::{top_confidence, weighted_vote, Vote};
use fusekit_core::metrics::{full_report, roc_curve, ReportConfig};
use fusekit_core::simulator::{ensemble_experiment, training_distribution, SimConfig, WeightsMode};
use fusekit_core::{ClassIndex, PredictionSet, ProbVector, WeightTable};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(
        elapsed < Duration::from_secs(limit_s),
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn softmax_row(rng: &mut StdRng, classes: usize) -> ProbVector {
    let logits: Vec<f64> = (0..classes).map(|_| rng.random_range(-4.0..4.0)).collect();
    ProbVector::normalize(logits.iter().map(|l: &f64| l.exp()).collect()).unwrap()
}

/// Enumerates every class, accumulating the votes cast for it, and keeps the
/// first class whose total is strictly larger than all earlier ones.
fn enumerate_final_class(rows: &[ProbVector], weights: &[f64], classes: usize) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..classes {
        let mut total = 0.0;
        for (row, w) in rows.iter().zip(weights) {
            let p = row.as_slice();
            let pmax = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let voted = p.iter().position(|&x| x == pmax).unwrap();
            if voted == j {
                total += w * pmax;
            }
        }
        if total > best.1 {
            best = (j, total);
        }
    }
    best.0
}

fn fc_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let rows: Vec<ProbVector> = (0..n).map(|_| softmax_row(&mut rng, 3)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let votes: Vec<Vote> = rows.iter().map(top_confidence).collect();
        let got = weighted_vote(&votes, &weights, 3).map_err(|e| e.to_string())?;
        if got.final_class.value() != enumerate_final_class(&rows, &weights, 3) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(mismatches == 0, format!("{mismatches} mismatches"))?;
    within(elapsed, 5)?;
    Ok(format!("0 mismatches over 1000 ensembles in {:.3} s", elapsed.as_secs_f64()))
}

fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in labels.iter().enumerate() {
        for (k, &nk) in labels.iter().enumerate() {
            if pi && !nk {
                pairs += 1.0;
                if scores[i] > scores[k] {
                    wins += 1.0;
                } else if scores[i] == scores[k] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn random_instance(rng: &mut StdRng, max_n: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=max_n);
    // a coarse grid forces ties
    let levels = rng.random_range(2..=10);
    let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

fn auc_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut tied = 0;
    for _ in 0..500 {
        let (scores, labels) = random_instance(&mut rng, 50);
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() < scores.len() {
            tied += 1;
        }
        let curve = roc_curve(&scores, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((curve.auc() - pair_count_auc(&scores, &labels)).abs());
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-12, format!("max |AUC - pair count| = {worst:e}"))?;
    within(elapsed, 5)?;
    Ok(format!(
        "max deviation {worst:e} over 500 instances ({tied} with ties) in {:.3} s",
        elapsed.as_secs_f64()
    ))
}

fn independent_voters() -> Outcome {
    let start = Instant::now();
    let dist = training_distribution();
    let independent = SimConfig::independent(200_000, vec![0.7; 3], 42);
    let s = ensemble_experiment(&independent, &dist, WeightsMode::Uniform).map_err(|e| e.to_string())?;
    check(
        (s.plain_vote_accuracy - 0.784).abs() <= 0.01,
        format!("plain vote accuracy {:.4}, expected 0.784 +/- 0.01", s.plain_vote_accuracy),
    )?;
    for (i, a) in s.individual_accuracies.iter().enumerate() {
        check(
            s.plain_vote_accuracy > *a,
            format!("plain vote {:.4} not above classifier {i} at {a:.4}", s.plain_vote_accuracy),
        )?;
    }
    let correlated = SimConfig {
        correlation: 1.0,
        ..independent
    };
    let c = ensemble_experiment(&correlated, &dist, WeightsMode::Uniform).map_err(|e| e.to_string())?;
    for (i, a) in c.individual_accuracies.iter().enumerate() {
        check(
            (c.plain_vote_accuracy - a).abs() <= 0.01,
            format!("correlated ensemble {:.4} vs classifier {i} at {a:.4}", c.plain_vote_accuracy),
        )?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 30)?;
    let individual: Vec<String> = s.individual_accuracies.iter().map(|a| format!("{a:.4}")).collect();
    Ok(format!(
        "independent plain vote {:.4} vs individual [{}]; correlated {:.4} vs {:.4}; {:.2} s",
        s.plain_vote_accuracy,
        individual.join(", "),
        c.plain_vote_accuracy,
        c.individual_accuracies[0],
        elapsed.as_secs_f64()
    ))
}

fn published_counts() -> Outcome {
    let counts = BTreeMap::from([
        (ClassIndex::NEVUS, 1372),
        (ClassIndex::MELANOMA, 374),
        (ClassIndex::SEBORRHEIC_KERATOSIS, 254),
    ]);
    let targets = BTreeMap::from([
        (ClassIndex::NEVUS, 8200),
        (ClassIndex::MELANOMA, 4600),
        (ClassIndex::SEBORRHEIC_KERATOSIS, 1500),
    ]);
    let plan = plan_from_counts(&counts, &targets, 0, PlanOptions::default()).map_err(|e| e.to_string())?;
    for (class, &want) in &targets {
        let got = plan.entries.iter().filter(|e| e.class == *class).map(|e| e.ops.len()).sum::<usize>();
        check(got == want, format!("{class}: {got} outputs, expected {want}"))?;
        check(plan.totals[class] == want, format!("{class}: totals table says {}", plan.totals[class]))?;
        let sizes: Vec<usize> = plan.entries.iter().filter(|e| e.class == *class).map(|e| e.ops.len()).collect();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        check(spread <= 1, format!("{class}: per-image op counts spread {spread}"))?;
    }
    check(plan.total() == 14_300, format!("grand total {}", plan.total()))?;
    check(plan.manifest().len() == 14_300, "manifest length differs from total")?;
    Ok(format!(
        "nevus {} melanoma {} seborrheic_keratosis {}, total {}",
        plan.totals[&ClassIndex::NEVUS],
        plan.totals[&ClassIndex::MELANOMA],
        plan.totals[&ClassIndex::SEBORRHEIC_KERATOSIS],
        plan.total()
    ))
}

fn compose(ops: &[TransformOp], img: &ImageBuffer) -> Result<ImageBuffer, String> {
    ops.iter()
        .try_fold(img.clone(), |acc, op| apply(op, &acc))
        .map_err(|e| e.to_string())
}

fn group_laws() -> Outcome {
    use TransformOp::*;
    let mut rng = StdRng::seed_from_u64(5);
    for case in 0..100 {
        let (h, w, c) = (rng.random_range(1..=64), rng.random_range(1..=64), rng.random_range(1..=3));
        let pixels: Vec<u8> = (0..h * w * c).map(|_| rng.random()).collect();
        let img = ImageBuffer::new(h, w, c, pixels).map_err(|e| e.to_string())?;
        let laws: [(&str, &[TransformOp]); 4] = [
            ("rotate90^4", &[Rotate90; 4]),
            ("flip^2", &[FlipHorizontal; 2]),
            ("rotate180^2", &[Rotate180; 2]),
            ("identity", &[Identity]),
        ];
        for (name, ops) in laws {
            check(compose(ops, &img)? == img, format!("{name} differs on case {case} ({h}x{w}x{c})"))?;
        }
    }
    Ok("rotate90^4 = flip^2 = rotate180^2 = identity on 100 buffers".into())
}

const PUBLISHED_WEIGHTS: [(&str, f64); 4] =
    [("googlenet", 0.895), ("alexnet", 0.851), ("resnet50", 0.846), ("vgg16", 0.862)];

fn fusekit_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fusekit"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("fusekit {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out.stdout)
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn weight_golden() -> Outcome {
    let table = WeightTable::new(PUBLISHED_WEIGHTS.iter().map(|&(id, w)| (id.to_string(), w)).collect())
        .map_err(|e| e.to_string())?;
    let text = format_weights(&table);
    let back = parse_weights_text(Path::new("weights.csv"), &text).map_err(|e| e.to_string())?;
    for ((id, w), (bid, bw)) in table.iter().zip(back.iter()) {
        check(id == bid && w.to_bits() == bw.to_bits(), format!("{id}={w} read back as {bid}={bw}"))?;
    }
    check(format_weights(&back) == text, "re-serialized text differs")?;

    // One image; googlenet and alexnet vote melanoma, resnet50 and vgg16 vote nevus.
    let rows = [[0.9, 0.05, 0.05], [0.8, 0.15, 0.05], [0.025, 0.95, 0.025], [0.3, 0.6, 0.1]];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let weights_path = dir.path().join("weights.csv");
    write_weights(&weights_path, &back).map_err(|e| e.to_string())?;
    let mut args: Vec<PathBuf> = Vec::new();
    for ((id, _), row) in PUBLISHED_WEIGHTS.iter().zip(rows) {
        let set = PredictionSet::new(
            *id,
            vec!["ISIC_0000001".into()],
            vec![ProbVector::new(row.to_vec()).map_err(|e| e.to_string())?],
        )
        .map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{id}.csv"));
        write_prediction_file(&path, &PredictionFile { set, decisions: None }).map_err(|e| e.to_string())?;
        args.push(path);
    }
    let mut cli: Vec<&str> = vec!["fuse"];
    cli.extend(args.iter().map(|p| path_str(p)));
    cli.extend(["--weights", path_str(&weights_path)]);
    let stdout = fusekit_bin(&cli)?;
    let fused = parse_prediction_text(Path::new("fused.csv"), &String::from_utf8_lossy(&stdout), "fused")
        .map_err(|e| e.to_string())?;
    let decision = fused.decisions.as_ref().and_then(|d| d.first().copied());
    check(decision == Some(ClassIndex::MELANOMA), format!("fused decision {decision:?}"))?;
    let (m, nv) = (0.895 * 0.9 + 0.851 * 0.8, 0.846 * 0.95 + 0.862 * 0.6);
    let scores = fused.set.rows()[0].as_slice();
    check(
        (scores[0] - m / (m + nv)).abs() < 1e-12 && (scores[1] - nv / (m + nv)).abs() < 1e-12 && scores[2] == 0.0,
        format!("fused scores {scores:?}"),
    )?;
    check((m - 1.4863).abs() < 1e-12 && (nv - 1.3209).abs() < 1e-12, "hand sums drifted")?;
    Ok(format!("weights round-trip bit-exactly; class sums {m:.4} vs {nv:.4} -> melanoma"))
}

const PUBLISHED_REPORT: [(&str, f64); 24] = [
    ("AVG_ACC", 0.893), ("M_ACC", 0.867), ("SK_ACC", 0.920),
    ("AVG_AUC", 0.932), ("M_AUC", 0.899), ("SK_AUC", 0.964),
    ("AVG_AP", 0.834), ("M_AP", 0.753), ("SK_AP", 0.915),
    ("AVG_SE", 0.600), ("M_SE", 0.367), ("SK_SE", 0.833),
    ("AVG_SP82", 0.894), ("M_SP82", 0.833), ("SK_SP82", 0.954),
    ("AVG_SP89", 0.850), ("M_SP89", 0.775), ("SK_SP89", 0.926),
    ("AVG_SP95", 0.659), ("M_SP95", 0.475), ("SK_SP95", 0.843),
    ("AVG_SP", 0.973), ("M_SP", 0.992), ("SK_SP", 0.954),
];

fn report_structure() -> Outcome {
    let report = ReportFile::from_rounded(PUBLISHED_REPORT);
    let text = format_report(&report);
    let parsed = parse_report_text(Path::new("report.csv"), &text).map_err(|e| e.to_string())?;
    check(parsed == report, "parsed report differs from the written one")?;
    check(format_report(&parsed) == text, "re-serialized text differs")?;
    check(parsed.cells.len() == 24, format!("{} cells", parsed.cells.len()))?;
    let violations = parsed.coherence_violations(0.0005 + 1e-12);
    check(violations.is_empty(), violations.join("; "))?;
    let ours: Vec<String> = {
        let labels: Vec<ClassIndex> = (0..3).map(ClassIndex::new).collect();
        let rows: Vec<ProbVector> = labels.iter().map(|&c| ProbVector::one_hot(c, 3).unwrap()).collect();
        let refs: Vec<&ProbVector> = rows.iter().collect();
        let r = full_report(&refs, &labels, &ReportConfig::default()).map_err(|e| e.to_string())?;
        r.cells().into_iter().map(|(name, _)| name).collect()
    };
    let names: Vec<&str> = parsed.cells.iter().map(|c| c.name.as_str()).collect();
    check(ours == names, format!("cell order {names:?} vs computed {ours:?}"))?;
    Ok("24 cells parse, round-trip, and AVG = mean(M, SK) within 0.0005".into())
}

fn metric_sweep() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);

    let labels: Vec<ClassIndex> = (0..60).map(|i| ClassIndex::new((i * 7) % 3)).collect();
    let rows: Vec<ProbVector> = labels.iter().map(|&c| ProbVector::one_hot(c, 3).unwrap()).collect();
    let refs: Vec<&ProbVector> = rows.iter().collect();
    let report = full_report(&refs, &labels, &ReportConfig::default()).map_err(|e| e.to_string())?;
    for (name, v) in report.cells() {
        check(v == 1.0, format!("perfect predictor: {name} = {v}"))?;
    }

    let levels: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
    for case in 0..200 {
        let (scores, labels) = random_instance(&mut rng, 80);
        let curve = roc_curve(&scores, &labels).map_err(|e| e.to_string())?;
        let sp: Vec<f64> = levels
            .iter()
            .map(|&l| curve.specificity_at_sensitivity(l))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        check(sp.windows(2).all(|w| w[1] <= w[0]), format!("SP increases with level on curve {case}"))?;
    }

    let transforms: [fn(f64) -> f64; 3] = [f64::exp, |x| 3.0 * x + 7.0, |x| x * x * x + x];
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (scores, labels) = random_instance(&mut rng, 50);
        let base = roc_curve(&scores, &labels).map_err(|e| e.to_string())?.auc();
        for f in transforms {
            let moved: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
            let auc = roc_curve(&moved, &labels).map_err(|e| e.to_string())?.auc();
            worst = worst.max((auc - base).abs());
        }
    }
    check(worst <= 1e-12, format!("AUC moved by {worst:e} under an increasing transform"))?;
    Ok("perfect predictor all 1.0; SP non-increasing on 200 curves; AUC invariant on 100 instances".into())
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sim42")
}

fn pipeline_once() -> Result<Vec<(String, Vec<u8>)>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let preds: Vec<PathBuf> = (0..4).map(|i| fixture().join(format!("sim{i}.csv"))).collect();
    let labels = fixture().join("labels.csv");
    let weights = dir.path().join("weights.csv");
    let fused = dir.path().join("fused.csv");
    let report = dir.path().join("report.csv");

    let mut args = vec!["calibrate"];
    args.extend(preds.iter().map(|p| path_str(p)));
    args.extend(["--labels", path_str(&labels), "--out", path_str(&weights)]);
    fusekit_bin(&args)?;

    let mut args = vec!["fuse"];
    args.extend(preds.iter().map(|p| path_str(p)));
    args.extend(["--weights", path_str(&weights), "--out", path_str(&fused)]);
    fusekit_bin(&args)?;

    fusekit_bin(&["evaluate", path_str(&fused), "--labels", path_str(&labels), "--out", path_str(&report)])?;

    [("weights.csv", &weights), ("fused.csv", &fused), ("report.csv", &report)]
        .into_iter()
        .map(|(name, p)| Ok((name.to_string(), std::fs::read(p).map_err(|e| e.to_string())?)))
        .collect()
}

fn pipeline_determinism() -> Outcome {
    let first = pipeline_once()?;
    for run in 2..=3 {
        let again = pipeline_once()?;
        for ((name, a), (_, b)) in first.iter().zip(&again) {
            check(a == b, format!("{name} differs on run {run}"))?;
        }
    }
    let sizes: Vec<String> = first.iter().map(|(n, b)| format!("{n} {} B", b.len())).collect();
    Ok(format!("3 runs byte-identical ({})", sizes.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("fusion oracle equivalence", fc_oracle),
        ("AUC oracle equivalence", auc_oracle),
        ("majority vote of independent voters", independent_voters),
        ("published augmentation counts", published_counts),
        ("transform group laws", group_laws),
        ("weight file golden test", weight_golden),
        ("report structure", report_structure),
        ("metric sanity sweep", metric_sweep),
        ("pipeline determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
