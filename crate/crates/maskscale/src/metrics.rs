//! Segmentation evaluation: per-class accuracy, IoU, boundary-F1, Dice and
//! global accuracy over (ground-truth, prediction) mask pairs.
//!
//! Everything except the boundary score is derived from a single
//! [`ConfusionMatrix`]; corpus evaluation accumulates one matrix across all
//! pairs, so per-class accuracy and IoU are pixel-weighted over the corpus.
//! The boundary score ([`bf_score`]) is a per-image quantity (an F-measure
//! over boundary-pixel matches within a distance tolerance) and is averaged
//! per class across images. Classes absent from both masks report `None`
//! for the affected metrics instead of a fake 0 or 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{class_histogram, GrayImage, LabelMask};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("mask dimensions differ: ground truth {gt_width}x{gt_height}, prediction {pred_width}x{pred_height}")]
    DimensionMismatch {
        gt_width: u32,
        gt_height: u32,
        pred_width: u32,
        pred_height: u32,
    },
    #[error("canonical label sets differ: ground truth {gt:?}, prediction {pred:?}")]
    LabelSetMismatch { gt: Vec<u8>, pred: Vec<u8> },
    #[error("{which} mask is not canonical; unexpected labels: {extra:?}")]
    NonCanonical { which: &'static str, extra: Vec<u8> },
    #[error("theta must be a positive finite distance, got {0}")]
    InvalidTheta(f64),
    #[error("cannot evaluate an empty corpus")]
    EmptyCorpus,
    #[error("confusion matrices with different label sets cannot be merged")]
    MergeLabelMismatch,
}

/// Per-pixel tally over a fixed label set: `count(i, j)` is the number of
/// pixels labeled `i` in the ground truth and `j` in the prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<u8>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    fn zeroed(labels: &[u8]) -> Self {
        Self {
            labels: labels.to_vec(),
            counts: vec![0; labels.len() * labels.len()],
        }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    fn index_of(&self, label: u8) -> usize {
        self.labels
            .iter()
            .position(|&l| l == label)
            .expect("label belongs to this matrix")
    }

    /// Pixels with ground-truth label `gt` predicted as `pred`.
    pub fn count(&self, gt: u8, pred: u8) -> u64 {
        let k = self.labels.len();
        self.counts[self.index_of(gt) * k + self.index_of(pred)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        let k = self.labels.len();
        (0..k).map(|i| self.counts[i * k + i]).sum()
    }

    fn tp(&self, i: usize) -> u64 {
        self.counts[i * self.labels.len() + i]
    }

    fn row_sum(&self, i: usize) -> u64 {
        let k = self.labels.len();
        self.counts[i * k..(i + 1) * k].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        let k = self.labels.len();
        (0..k).map(|i| self.counts[i * k + j]).sum()
    }

    /// Entrywise sum; both matrices must be over the same label set.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), MetricsError> {
        if self.labels != other.labels {
            return Err(MetricsError::MergeLabelMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

fn check_pair(gt: &LabelMask, pred: &LabelMask) -> Result<(), MetricsError> {
    let (gi, pi) = (gt.image(), pred.image());
    if !gi.same_dimensions(pi) {
        return Err(MetricsError::DimensionMismatch {
            gt_width: gi.width(),
            gt_height: gi.height(),
            pred_width: pi.width(),
            pred_height: pi.height(),
        });
    }
    if gt.canonical_labels() != pred.canonical_labels() {
        return Err(MetricsError::LabelSetMismatch {
            gt: gt.canonical_labels().to_vec(),
            pred: pred.canonical_labels().to_vec(),
        });
    }
    for (mask, which) in [(gt, "ground-truth"), (pred, "prediction")] {
        if !mask.is_canonical() {
            let extra = class_histogram(mask.image())
                .labels()
                .into_iter()
                .filter(|l| !mask.canonical_labels().contains(l))
                .collect();
            return Err(MetricsError::NonCanonical { which, extra });
        }
    }
    Ok(())
}

/// Tallies the per-pixel confusion of a canonical mask pair over their
/// shared label set. Every canonical label gets a row and column even when
/// it never occurs, so absent classes stay visible downstream.
pub fn confusion(gt: &LabelMask, pred: &LabelMask) -> Result<ConfusionMatrix, MetricsError> {
    check_pair(gt, pred)?;
    let labels = gt.canonical_labels();
    let k = labels.len();
    // Labels are sparse u8 values; a 256-entry lookup avoids a search per pixel.
    let mut index = [usize::MAX; 256];
    for (i, &l) in labels.iter().enumerate() {
        index[l as usize] = i;
    }
    let mut cm = ConfusionMatrix::zeroed(labels);
    for (&g, &p) in gt.image().samples().iter().zip(pred.image().samples()) {
        cm.counts[index[g as usize] * k + index[p as usize]] += 1;
    }
    Ok(cm)
}

/// Accuracy and IoU for one class; `None` marks quantities whose defining
/// ratio is 0/0 (class absent from the ground truth, or from both masks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: u8,
    pub accuracy: Option<f64>,
    pub iou: Option<f64>,
}

/// Per-class accuracy/IoU plus the global pixel accuracy of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub global_accuracy: f64,
}

/// Derives per-class accuracy (`TP/(TP+FN)`, i.e. recall), per-class IoU
/// (`TP/(TP+FP+FN)`) and global accuracy (`trace/total`) from a matrix.
pub fn class_metrics(cm: &ConfusionMatrix) -> ClassMetricsReport {
    let per_class = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let tp = cm.tp(i);
            let gt_total = cm.row_sum(i);
            let union = gt_total + cm.col_sum(i) - tp;
            ClassMetrics {
                label,
                accuracy: ratio(tp, gt_total),
                iou: ratio(tp, union),
            }
        })
        .collect();
    ClassMetricsReport {
        per_class,
        global_accuracy: cm.trace() as f64 / cm.total() as f64,
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Per-class Dice coefficients and their unweighted mean over the classes
/// present in at least one of the two masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceScores {
    pub per_class: Vec<(u8, Option<f64>)>,
    pub mean: f64,
}

/// Sørensen-Dice per class, `2TP/(2TP+FP+FN)`, with the per-image scalar
/// being the mean over classes present in either mask.
pub fn dice(gt: &LabelMask, pred: &LabelMask) -> Result<DiceScores, MetricsError> {
    let cm = confusion(gt, pred)?;
    let per_class: Vec<(u8, Option<f64>)> = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let tp = cm.tp(i);
            let denom = cm.row_sum(i) + cm.col_sum(i);
            (label, ratio(2 * tp, denom))
        })
        .collect();
    let present: Vec<f64> = per_class.iter().filter_map(|&(_, d)| d).collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Ok(DiceScores { per_class, mean })
}

/// The default boundary-match tolerance: 0.75% of the image diagonal, with
/// a floor of one pixel.
pub fn default_theta(width: u32, height: u32) -> f64 {
    let diagonal = (f64::from(width).powi(2) + f64::from(height).powi(2)).sqrt();
    (0.0075 * diagonal).max(1.0)
}

/// Pixels of `label` with at least one 4-neighbor of a different label;
/// pixels on the image border always qualify (outside counts as different).
fn boundary(mask: &GrayImage, label: u8) -> Vec<(u32, u32)> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) != label {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x == w - 1
                || y == h - 1
                || mask.get(x - 1, y) != label
                || mask.get(x + 1, y) != label
                || mask.get(x, y - 1) != label
                || mask.get(x, y + 1) != label;
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

/// Fraction of `from` pixels lying within Euclidean distance `theta` of some
/// `to` pixel.
fn matched_fraction(from: &[(u32, u32)], to: &[(u32, u32)], dims: (u32, u32), theta: f64) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    let theta_sq = theta * theta;
    let radius = theta.floor() as i64;
    // For the usual small tolerances, test a disk of offsets against a
    // bitmap of `to`; for very large tolerances the disk outgrows the
    // pairwise scan and we fall back to it.
    let disk_area = (2 * radius + 1) * (2 * radius + 1);
    if disk_area as usize > 4 * (to.len() + 1) {
        let matched = from
            .iter()
            .filter(|&&(fx, fy)| {
                to.iter().any(|&(tx, ty)| {
                    let dx = f64::from(fx) - f64::from(tx);
                    let dy = f64::from(fy) - f64::from(ty);
                    dx * dx + dy * dy <= theta_sq
                })
            })
            .count();
        return matched as f64 / from.len() as f64;
    }

    let (w, h) = (dims.0 as i64, dims.1 as i64);
    let mut bitmap = vec![false; (w * h) as usize];
    for &(tx, ty) in to {
        bitmap[(i64::from(ty) * w + i64::from(tx)) as usize] = true;
    }
    let mut offsets = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if (dx * dx + dy * dy) as f64 <= theta_sq {
                offsets.push((dx, dy));
            }
        }
    }
    let matched = from
        .iter()
        .filter(|&&(fx, fy)| {
            offsets.iter().any(|&(dx, dy)| {
                let x = i64::from(fx) + dx;
                let y = i64::from(fy) + dy;
                x >= 0 && x < w && y >= 0 && y < h && bitmap[(y * w + x) as usize]
            })
        })
        .count();
    matched as f64 / from.len() as f64
}

/// Boundary-F1 for one class: precision is the fraction of predicted
/// boundary pixels within `theta` of the true boundary, recall the converse,
/// and the score their harmonic mean (0 when both vanish). Two empty
/// boundaries — the class absent from both masks — count as perfectly
/// aligned (1.0).
pub fn bf_score(
    gt: &LabelMask,
    pred: &LabelMask,
    label: u8,
    theta: f64,
) -> Result<f64, MetricsError> {
    let (gi, pi) = (gt.image(), pred.image());
    if !gi.same_dimensions(pi) {
        return Err(MetricsError::DimensionMismatch {
            gt_width: gi.width(),
            gt_height: gi.height(),
            pred_width: pi.width(),
            pred_height: pi.height(),
        });
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(MetricsError::InvalidTheta(theta));
    }
    let gt_boundary = boundary(gi, label);
    let pred_boundary = boundary(pi, label);
    if gt_boundary.is_empty() && pred_boundary.is_empty() {
        return Ok(1.0);
    }
    let dims = (gi.width(), gi.height());
    let precision = matched_fraction(&pred_boundary, &gt_boundary, dims, theta);
    let recall = matched_fraction(&gt_boundary, &pred_boundary, dims, theta);
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// One row of the corpus report; regions are named Region1/Region2/Region3
/// for the canonical labels 255/128/0 (brightest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub region: String,
    pub label: u8,
    pub accuracy: Option<f64>,
    pub iou: Option<f64>,
    pub mean_bf: f64,
}

/// Corpus-level evaluation: accuracy/IoU/global from the accumulated
/// confusion matrix, per-class boundary-F1 averaged over images, and one
/// Dice value per image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegEvalReport {
    pub pairs: usize,
    /// The tolerance passed in, or `None` when each image used its own
    /// diagonal-derived default.
    pub theta: Option<f64>,
    pub per_class: Vec<RegionMetrics>,
    pub global_accuracy: f64,
    pub per_image_dice: Vec<f64>,
    pub mean_dice: f64,
}

/// Region naming convention: the canonical tri-class set gets the fixed
/// names Region1 (255), Region2 (128), Region3 (0); any other label set is
/// reported brightest-first as `Label<v>`.
fn region_rows(labels: &[u8]) -> Vec<(String, u8)> {
    if labels == crate::raster::TRI_CLASS_LABELS {
        return vec![
            ("Region1".to_string(), 255),
            ("Region2".to_string(), 128),
            ("Region3".to_string(), 0),
        ];
    }
    let mut sorted: Vec<u8> = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .into_iter()
        .map(|l| (format!("Label{l}"), l))
        .collect()
}

/// Evaluates a corpus of (ground-truth, prediction) pairs sharing one
/// canonical label set. `theta` overrides the per-image default boundary
/// tolerance.
pub fn evaluate_corpus(
    pairs: &[(LabelMask, LabelMask)],
    theta: Option<f64>,
) -> Result<SegEvalReport, MetricsError> {
    let Some((first_gt, _)) = pairs.first() else {
        return Err(MetricsError::EmptyCorpus);
    };
    if let Some(t) = theta {
        if !(t.is_finite() && t > 0.0) {
            return Err(MetricsError::InvalidTheta(t));
        }
    }
    let labels = first_gt.canonical_labels().to_vec();
    let mut merged = ConfusionMatrix::zeroed(&labels);
    let mut bf_sums = vec![0.0f64; labels.len()];
    let mut per_image_dice = Vec::with_capacity(pairs.len());

    for (gt, pred) in pairs {
        if gt.canonical_labels() != labels {
            return Err(MetricsError::LabelSetMismatch {
                gt: labels.clone(),
                pred: gt.canonical_labels().to_vec(),
            });
        }
        merged.merge(&confusion(gt, pred)?)?;
        let t = theta.unwrap_or_else(|| default_theta(gt.image().width(), gt.image().height()));
        for (sum, &label) in bf_sums.iter_mut().zip(&labels) {
            *sum += bf_score(gt, pred, label, t)?;
        }
        per_image_dice.push(dice(gt, pred)?.mean);
    }

    let cm_report = class_metrics(&merged);
    let n = pairs.len() as f64;
    let per_class = region_rows(&labels)
        .into_iter()
        .map(|(region, label)| {
            let i = labels.iter().position(|&l| l == label).expect("row label");
            RegionMetrics {
                region,
                label,
                accuracy: cm_report.per_class[i].accuracy,
                iou: cm_report.per_class[i].iou,
                mean_bf: bf_sums[i] / n,
            }
        })
        .collect();
    let mean_dice = per_image_dice.iter().sum::<f64>() / n;
    Ok(SegEvalReport {
        pairs: pairs.len(),
        theta,
        per_class,
        global_accuracy: cm_report.global_accuracy,
        per_image_dice,
        mean_dice,
    })
}
