//! Training-set expansion by flips, right-angle rotations and random crops.
//!
//! A plan gives every source image an ordered list of single transforms; each
//! transform yields one output image. Within a class, outputs are dealt
//! round-robin over the source images (per-image counts differ by at most one)
//! and each image walks [`OP_CYCLE`] from the start, so its first output is the
//! untouched original. Crop offsets come from a seed keyed by
//! `(plan seed, image id, output index)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::class::ClassIndex;
use crate::error::{Error, Result};
use crate::rng::{hash_str, mix64, CounterRng};

pub const DEFAULT_CROP_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformOp {
    Identity,
    FlipHorizontal,
    /// Counter-clockwise rotations.
    Rotate90,
    Rotate180,
    Rotate270,
    RandomCrop { fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Identity,
    FlipHorizontal,
    Rotate90,
    Rotate180,
    Rotate270,
    RandomCrop,
}

/// Order in which each source image receives transforms.
pub const OP_CYCLE: [OpKind; 6] = [
    OpKind::Identity,
    OpKind::FlipHorizontal,
    OpKind::Rotate90,
    OpKind::Rotate180,
    OpKind::Rotate270,
    OpKind::RandomCrop,
];

impl TransformOp {
    pub fn kind(&self) -> OpKind {
        match self {
            TransformOp::Identity => OpKind::Identity,
            TransformOp::FlipHorizontal => OpKind::FlipHorizontal,
            TransformOp::Rotate90 => OpKind::Rotate90,
            TransformOp::Rotate180 => OpKind::Rotate180,
            TransformOp::Rotate270 => OpKind::Rotate270,
            TransformOp::RandomCrop { .. } => OpKind::RandomCrop,
        }
    }
}

impl fmt::Display for TransformOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformOp::Identity => f.write_str("identity"),
            TransformOp::FlipHorizontal => f.write_str("flip_horizontal"),
            TransformOp::Rotate90 => f.write_str("rotate90"),
            TransformOp::Rotate180 => f.write_str("rotate180"),
            TransformOp::Rotate270 => f.write_str("rotate270"),
            TransformOp::RandomCrop { fraction, seed } => {
                write!(f, "random_crop(fraction={fraction};seed={seed:016x})")
            }
        }
    }
}

/// Row-major interleaved 8-bit pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Augmentation(format!(
                "image dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::Augmentation(format!(
                "{height}x{width}x{channels} image needs {} values, got {}",
                height * width * channels,
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[u8] {
        let at = (row * self.width + col) * self.channels;
        &self.pixels[at..at + self.channels]
    }

    /// Builds an image whose output pixel `(r, c)` copies source pixel `f(r, c)`.
    fn remap(&self, height: usize, width: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> Self {
        let mut pixels = Vec::with_capacity(height * width * self.channels);
        for r in 0..height {
            for c in 0..width {
                let (sr, sc) = f(r, c);
                pixels.extend_from_slice(self.pixel(sr, sc));
            }
        }
        ImageBuffer {
            height,
            width,
            channels: self.channels,
            pixels,
        }
    }
}

pub fn apply(op: &TransformOp, img: &ImageBuffer) -> Result<ImageBuffer> {
    let (h, w) = (img.height, img.width);
    Ok(match *op {
        TransformOp::Identity => img.clone(),
        TransformOp::FlipHorizontal => img.remap(h, w, |r, c| (r, w - 1 - c)),
        TransformOp::Rotate90 => img.remap(w, h, |r, c| (c, w - 1 - r)),
        TransformOp::Rotate180 => img.remap(h, w, |r, c| (h - 1 - r, w - 1 - c)),
        TransformOp::Rotate270 => img.remap(w, h, |r, c| (h - 1 - c, r)),
        TransformOp::RandomCrop { fraction, seed } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Augmentation(format!(
                    "crop fraction must be in (0, 1], got {fraction}"
                )));
            }
            // truncation is floor for non-negative values
            let ch = (fraction * h as f64) as usize;
            let cw = (fraction * w as f64) as usize;
            if ch == 0 || cw == 0 {
                return Err(Error::Augmentation(format!(
                    "crop fraction {fraction} of a {h}x{w} image leaves an empty window"
                )));
            }
            let rng = CounterRng::new(seed);
            let top = rng.below(0, (h - ch + 1) as u64) as usize;
            let left = rng.below(1, (w - cw + 1) as u64) as usize;
            img.remap(ch, cw, |r, c| (top + r, left + c))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceImage {
    pub id: String,
    pub class: ClassIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub source_id: String,
    pub class: ClassIndex,
    pub ops: Vec<TransformOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPlan {
    pub entries: Vec<PlanEntry>,
    pub totals: BTreeMap<ClassIndex, usize>,
}

impl AugmentationPlan {
    pub fn total(&self) -> usize {
        self.totals.values().sum()
    }

    /// Output rows the plan will produce, in plan order.
    pub fn manifest(&self) -> Vec<ManifestRow> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.ops.iter().enumerate().map(move |(r, op)| ManifestRow {
                    output_id: output_id(&e.source_id, r),
                    source_id: e.source_id.clone(),
                    class: e.class,
                    op: *op,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub crop_fraction: f64,
    /// Permit targets below the source count (only the first images are kept).
    pub allow_subsample: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            crop_fraction: DEFAULT_CROP_FRACTION,
            allow_subsample: false,
        }
    }
}

/// Seed of the crop applied as output `occurrence` of image `image_id`.
pub fn crop_seed(seed: u64, image_id: &str, occurrence: usize) -> u64 {
    mix64(mix64(seed ^ hash_str(image_id)).wrapping_add(occurrence as u64))
}

fn op_for(kind: OpKind, seed: u64, image_id: &str, occurrence: usize, fraction: f64) -> TransformOp {
    match kind {
        OpKind::Identity => TransformOp::Identity,
        OpKind::FlipHorizontal => TransformOp::FlipHorizontal,
        OpKind::Rotate90 => TransformOp::Rotate90,
        OpKind::Rotate180 => TransformOp::Rotate180,
        OpKind::Rotate270 => TransformOp::Rotate270,
        OpKind::RandomCrop => TransformOp::RandomCrop {
            fraction,
            seed: crop_seed(seed, image_id, occurrence),
        },
    }
}

/// Plans outputs so that every class reaches its target exactly.
pub fn plan(
    sources: &[SourceImage],
    targets: &BTreeMap<ClassIndex, usize>,
    seed: u64,
    options: PlanOptions,
) -> Result<AugmentationPlan> {
    if !(options.crop_fraction > 0.0 && options.crop_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "crop fraction must be in (0, 1], got {}",
            options.crop_fraction
        )));
    }
    let mut counts: BTreeMap<ClassIndex, usize> = BTreeMap::new();
    for s in sources {
        *counts.entry(s.class).or_default() += 1;
    }
    for (&class, &count) in &counts {
        let Some(&target) = targets.get(&class) else {
            return Err(Error::Config(format!("no target for class {class}")));
        };
        if target < count && !options.allow_subsample {
            return Err(Error::Config(format!(
                "target {target} for class {class} is below its {count} source images \
                 (subsampling not allowed)"
            )));
        }
    }
    for (&class, &target) in targets {
        if target > 0 && !counts.contains_key(&class) {
            return Err(Error::Config(format!(
                "class {class} has target {target} but no source images"
            )));
        }
    }

    let mut seen = BTreeMap::new();
    let mut ranks: BTreeMap<ClassIndex, usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(sources.len());
    for s in sources {
        if seen.insert(s.id.as_str(), ()).is_some() {
            return Err(Error::DuplicateId(s.id.clone()).context("augmentation sources"));
        }
        // position of this image within its class, in source order
        let rank = next_rank(&mut ranks, s.class);
        let n = counts[&s.class];
        let target = targets[&s.class];
        let outputs = target / n + usize::from(rank < target % n);
        let ops = (0..outputs)
            .map(|r| op_for(OP_CYCLE[r % OP_CYCLE.len()], seed, &s.id, r, options.crop_fraction))
            .collect();
        entries.push(PlanEntry {
            source_id: s.id.clone(),
            class: s.class,
            ops,
        });
    }
    let mut totals = BTreeMap::new();
    for e in &entries {
        *totals.entry(e.class).or_default() += e.ops.len();
    }
    for (&class, &target) in targets {
        totals.entry(class).or_insert(0);
        debug_assert_eq!(totals[&class], target);
    }
    Ok(AugmentationPlan { entries, totals })
}

fn next_rank(ranks: &mut BTreeMap<ClassIndex, usize>, class: ClassIndex) -> usize {
    let slot = ranks.entry(class).or_default();
    let rank = *slot;
    *slot += 1;
    rank
}

/// Synthesizes source ids `<class>_<index>` from per-class counts and plans.
pub fn plan_from_counts(
    counts: &BTreeMap<ClassIndex, usize>,
    targets: &BTreeMap<ClassIndex, usize>,
    seed: u64,
    options: PlanOptions,
) -> Result<AugmentationPlan> {
    let sources: Vec<SourceImage> = counts
        .iter()
        .flat_map(|(&class, &n)| {
            (0..n).map(move |i| SourceImage {
                id: format!("{class}_{i:05}"),
                class,
            })
        })
        .collect();
    plan(&sources, targets, seed, options)
}

pub trait ImageSource {
    fn load(&mut self, id: &str) -> Result<ImageBuffer>;
}

pub trait ImageSink {
    fn store(&mut self, output_id: &str, image: &ImageBuffer) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub output_id: String,
    pub source_id: String,
    pub class: ClassIndex,
    pub op: TransformOp,
}

pub fn output_id(source_id: &str, occurrence: usize) -> String {
    format!("{source_id}_aug{occurrence:03}")
}

/// Writes one output per (entry, op), in plan order.
pub fn execute_plan(
    plan: &AugmentationPlan,
    source: &mut dyn ImageSource,
    sink: &mut dyn ImageSink,
) -> Result<Vec<ManifestRow>> {
    let mut manifest = Vec::with_capacity(plan.total());
    for entry in &plan.entries {
        if entry.ops.is_empty() {
            continue;
        }
        let img = source.load(&entry.source_id)?;
        for (r, op) in entry.ops.iter().enumerate() {
            let out = apply(op, &img).map_err(|e| e.context(format!("image `{}`", entry.source_id)))?;
            let id = output_id(&entry.source_id, r);
            sink.store(&id, &out)?;
            manifest.push(ManifestRow {
                output_id: id,
                source_id: entry.source_id.clone(),
                class: entry.class,
                op: *op,
            });
        }
    }
    Ok(manifest)
}
