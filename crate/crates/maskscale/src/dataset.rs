//! Corpus handling: image/mask pairing, seeded train/validation/test
//! splitting, reflection/translation augmentation, and batch resized export.
//!
//! A corpus is two directories of same-stem rasters — one of intensity
//! images, one of label masks. Pairing is purely by file stem, scanning is
//! deterministic (lexicographic), and every derived operation takes an
//! explicit seed, so a run can be reproduced from its recorded parameters.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgio::{self, ImgIoError, RasterFormat};
use crate::maskfilter::{audit, mask_resize, FilterStrategy, MaskFilterError};
use crate::raster::{GrayImage, LabelMask, RasterError};
use crate::resample::{resize_image, ResampleError, ResizeSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Image(#[from] ImgIoError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Filter(#[from] MaskFilterError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "pair {id}: image is {image_width}x{image_height} but mask is {mask_width}x{mask_height}"
    )]
    PairDimensionMismatch {
        id: String,
        image_width: u32,
        image_height: u32,
        mask_width: u32,
        mask_height: u32,
    },
    #[error("stem {stem} is ambiguous: {first} and {second} both match")]
    AmbiguousStem {
        stem: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("split fractions must be positive and sum to 1, got {train}/{val}/{test}")]
    InvalidSplit { train: f64, val: f64, test: f64 },
    #[error("invalid augmentation spec: {0}")]
    InvalidAugment(String),
    #[error("nothing to process")]
    EmptyInput,
}

/// One intensity image with its same-size label mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePair {
    pub id: String,
    pub image: GrayImage,
    pub mask: LabelMask,
}

impl SamplePair {
    pub fn new(id: String, image: GrayImage, mask: LabelMask) -> Result<Self, DatasetError> {
        if !image.same_dimensions(mask.image()) {
            return Err(DatasetError::PairDimensionMismatch {
                id,
                image_width: image.width(),
                image_height: image.height(),
                mask_width: mask.image().width(),
                mask_height: mask.image().height(),
            });
        }
        Ok(Self { id, image, mask })
    }
}

/// Fractions for the three-way dataset split plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let positive = self.train_frac > 0.0 && self.val_frac > 0.0 && self.test_frac > 0.0;
        let sums = (self.train_frac + self.val_frac + self.test_frac - 1.0).abs() <= 1e-9;
        if positive && sums {
            Ok(())
        } else {
            Err(DatasetError::InvalidSplit {
                train: self.train_frac,
                val: self.val_frac,
                test: self.test_frac,
            })
        }
    }
}

/// Reflection/translation augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    /// Probability of mirroring about the vertical axis.
    pub reflect_lr_prob: f64,
    /// Inclusive translation bounds, applied independently per axis.
    pub translate_min: i32,
    pub translate_max: i32,
    /// Value filling vacated image pixels (masks fill with their lowest
    /// canonical label instead).
    pub fill_value: u8,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            reflect_lr_prob: 0.5,
            translate_min: -10,
            translate_max: 10,
            fill_value: 0,
            seed: 0,
        }
    }
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(0.0..=1.0).contains(&self.reflect_lr_prob) {
            return Err(DatasetError::InvalidAugment(format!(
                "reflect_lr_prob must be in [0, 1], got {}",
                self.reflect_lr_prob
            )));
        }
        if self.translate_min > self.translate_max {
            return Err(DatasetError::InvalidAugment(format!(
                "translate range [{}, {}] is empty",
                self.translate_min, self.translate_max
            )));
        }
        Ok(())
    }
}

/// Outcome of scanning an image/mask directory pair.
#[derive(Debug)]
pub struct ScanReport {
    /// Matched pairs in lexicographic stem order.
    pub pairs: Vec<SamplePair>,
    /// Image stems with no mask counterpart.
    pub unpaired_images: Vec<String>,
    /// Mask stems with no image counterpart.
    pub unpaired_masks: Vec<String>,
    /// Stems whose mask contains labels outside the canonical set.
    pub non_canonical: Vec<String>,
}

fn stems_of(dir: &Path) -> Result<Vec<(String, PathBuf)>, DatasetError> {
    let mut out: Vec<(String, PathBuf)> = Vec::new();
    for path in imgio::list_rasters(dir)? {
        let stem = path
            .file_stem()
            .expect("listed files have names")
            .to_string_lossy()
            .to_string();
        if let Some((_, first)) = out.iter().find(|(s, _)| *s == stem) {
            return Err(DatasetError::AmbiguousStem {
                stem,
                first: first.clone(),
                second: path,
            });
        }
        out.push((stem, path));
    }
    out.sort();
    Ok(out)
}

/// Pairs images and masks by file stem, reading and dimension-checking every
/// match. Unpaired stems and non-canonical masks are reported, not fatal;
/// the caller decides whether they abort the run.
pub fn scan_pairs(
    image_dir: &Path,
    mask_dir: &Path,
    labels: &[u8],
) -> Result<ScanReport, DatasetError> {
    let images = stems_of(image_dir)?;
    let masks = stems_of(mask_dir)?;
    let mut report = ScanReport {
        pairs: Vec::new(),
        unpaired_images: Vec::new(),
        unpaired_masks: Vec::new(),
        non_canonical: Vec::new(),
    };
    for (stem, _) in &masks {
        if !images.iter().any(|(s, _)| s == stem) {
            report.unpaired_masks.push(stem.clone());
        }
    }
    for (stem, image_path) in &images {
        let Some((_, mask_path)) = masks.iter().find(|(s, _)| s == stem) else {
            report.unpaired_images.push(stem.clone());
            continue;
        };
        let image = imgio::read_gray(image_path)?;
        let mask_img = imgio::read_gray(mask_path)?;
        let mask = LabelMask::new(mask_img, labels)?;
        if !mask.is_canonical() {
            report.non_canonical.push(stem.clone());
        }
        report
            .pairs
            .push(SamplePair::new(stem.clone(), image, mask)?);
    }
    Ok(report)
}

/// The three-way partition produced by [`split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded-shuffle split: train takes `round(train_frac * N)` items, val
/// `round(val_frac * N)` (capped by what remains), test the rest. The three
/// parts always partition the input.
pub fn split<T>(items: Vec<T>, spec: &SplitSpec) -> Result<SplitResult<T>, DatasetError> {
    spec.validate()?;
    if items.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let mut items = items;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    items.shuffle(&mut rng);
    let n = items.len();
    let train_n = ((spec.train_frac * n as f64).round() as usize).min(n);
    let val_n = ((spec.val_frac * n as f64).round() as usize).min(n - train_n);
    let test = items.split_off(train_n + val_n);
    let val = items.split_off(train_n);
    Ok(SplitResult {
        train: items,
        val,
        test,
    })
}

/// Applies one concrete augmentation: optional left-right reflection, then a
/// translation by `(dx, dy)` with out-of-frame pixels filled by `image_fill`
/// in the image and the lowest canonical label in the mask.
///
/// Output pixel `(x, y)` reads input pixel `(x - dx, y - dy)`; integer
/// shifts never interpolate, so the mask stays canonical.
pub fn apply_augment(
    pair: &SamplePair,
    reflect: bool,
    dx: i32,
    dy: i32,
    image_fill: u8,
) -> SamplePair {
    let (image, mask_img) = if reflect {
        (pair.image.flipped_lr(), pair.mask.image().flipped_lr())
    } else {
        (pair.image.clone(), pair.mask.image().clone())
    };
    let mask_fill = pair.mask.canonical_labels()[0];
    let shift = |img: &GrayImage, fill: u8| {
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let sx = i64::from(x) - i64::from(dx);
            let sy = i64::from(y) - i64::from(dy);
            if sx >= 0 && sx < i64::from(img.width()) && sy >= 0 && sy < i64::from(img.height()) {
                img.get(sx as u32, sy as u32)
            } else {
                fill
            }
        })
    };
    SamplePair {
        id: pair.id.clone(),
        image: shift(&image, image_fill),
        mask: LabelMask::new(shift(&mask_img, mask_fill), pair.mask.canonical_labels())
            .expect("label set unchanged"),
    }
}

/// Draws reflection and translation from `rng` according to `spec` and
/// applies them identically to image and mask.
pub fn augment<R: Rng + ?Sized>(
    pair: &SamplePair,
    spec: &AugmentSpec,
    rng: &mut R,
) -> Result<SamplePair, DatasetError> {
    spec.validate()?;
    let reflect = rng.random_bool(spec.reflect_lr_prob);
    let dx = rng.random_range(spec.translate_min..=spec.translate_max);
    let dy = rng.random_range(spec.translate_min..=spec.translate_max);
    Ok(apply_augment(pair, reflect, dx, dy, spec.fill_value))
}

/// Where and how [`export_resized`] writes its output files.
#[derive(Debug, Clone)]
pub struct ExportTarget {
    pub image_dir: PathBuf,
    pub mask_dir: PathBuf,
    pub format: RasterFormat,
}

/// Per-file outcome of a batch export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportOutcome {
    pub id: String,
    /// Whether the exported mask's labels stayed inside the canonical set;
    /// `None` when the file failed before the audit.
    pub canonical: Option<bool>,
    pub extra_labels: Vec<u8>,
    pub error: Option<String>,
}

/// Aggregate of a batch export; failures are recorded per file rather than
/// aborting the batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportSummary {
    pub total: usize,
    pub exported: usize,
    pub canonical_masks: usize,
    pub non_canonical_masks: usize,
    pub failed: usize,
    pub files: Vec<ExportOutcome>,
}

/// Resizes every pair to `spec`'s destination size — images with `spec`'s
/// kernel, masks through [`mask_resize`] with the given strategy — audits
/// each resized mask, and writes both rasters. Per-file failures are
/// collected in the summary and do not stop the batch.
pub fn export_resized(
    pairs: &[SamplePair],
    spec: &ResizeSpec,
    strategy: FilterStrategy,
    target: &ExportTarget,
) -> Result<ExportSummary, DatasetError> {
    spec.validate()?;
    for dir in [&target.image_dir, &target.mask_dir] {
        std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut summary = ExportSummary {
        total: pairs.len(),
        exported: 0,
        canonical_masks: 0,
        non_canonical_masks: 0,
        failed: 0,
        files: Vec::with_capacity(pairs.len()),
    };
    for pair in pairs {
        match export_one(pair, spec, strategy, target) {
            Ok(report) => {
                let canonical = report.is_canonical;
                if canonical {
                    summary.canonical_masks += 1;
                } else {
                    summary.non_canonical_masks += 1;
                }
                summary.exported += 1;
                summary.files.push(ExportOutcome {
                    id: pair.id.clone(),
                    canonical: Some(canonical),
                    extra_labels: report.extra.iter().map(|e| e.label).collect(),
                    error: None,
                });
            }
            Err(e) => {
                summary.failed += 1;
                summary.files.push(ExportOutcome {
                    id: pair.id.clone(),
                    canonical: None,
                    extra_labels: Vec::new(),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(summary)
}

fn export_one(
    pair: &SamplePair,
    spec: &ResizeSpec,
    strategy: FilterStrategy,
    target: &ExportTarget,
) -> Result<crate::maskfilter::AuditReport, DatasetError> {
    // Each pair supplies its own source geometry; `spec` fixes the
    // destination size and kernel.
    let pair_spec =
        ResizeSpec::for_image(&pair.image, spec.dst_width, spec.dst_height, spec.kernel)?;
    let image = resize_image(&pair.image, &pair_spec)?;
    let mask = mask_resize(&pair.mask, &pair_spec, strategy)?;
    let report = audit(mask.image(), mask.canonical_labels());

    let file = format!("{}.{}", pair.id, target.format.extension());
    imgio::write_gray(&target.image_dir.join(&file), &image)?;
    imgio::write_gray(&target.mask_dir.join(&file), mask.image())?;
    Ok(report)
}
