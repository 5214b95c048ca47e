//! Scoring a predicted segmentation against its ground truth.
//!
//! Builds a ground-truth mask and a deliberately imperfect prediction
//! (the middle-class region shifted by two pixels), then walks the whole
//! metric suite: confusion matrix, per-region accuracy and IoU, boundary
//! F1 at a pixel tolerance, per-image Dice, and the corpus-level report
//! that the `maskscale eval` subcommand emits.
//!
//! Run with: cargo run --example segmentation_metrics

use maskscale::metrics::{
    bf_score, class_metrics, confusion, default_theta, dice, evaluate_corpus,
};
use maskscale::{GrayImage, LabelMask};

fn ring_mask(shift: u32) -> LabelMask {
    LabelMask::tri_class(GrayImage::from_fn(64, 64, |x, y| {
        let inside = |lo, hi| x >= lo + shift && x < hi + shift && y >= lo && y < hi;
        if inside(24, 40) {
            128
        } else if inside(12, 52) {
            255
        } else {
            0
        }
    }))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "  n/a".to_string(), |v| format!("{v:.3}"))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = ring_mask(0);
    let pred = ring_mask(2); // everything nudged two pixels right

    let cm = confusion(&gt, &pred)?;
    println!("confusion matrix (rows = truth 0/128/255, cols = prediction):");
    for &row in gt.canonical_labels() {
        let counts: Vec<String> = gt
            .canonical_labels()
            .iter()
            .map(|&col| format!("{:>6}", cm.count(row, col)))
            .collect();
        println!("  {row:>3} | {}", counts.join(" "));
    }

    let report = class_metrics(&cm);
    let theta = default_theta(64, 64);
    println!("\nper-class scores (boundary tolerance theta = {theta:.2} px):");
    println!("  label  accuracy    iou     bf");
    for c in &report.per_class {
        let bf = bf_score(&gt, &pred, c.label, theta)?;
        println!(
            "  {:>5}     {}  {}  {bf:.3}",
            c.label,
            fmt(c.accuracy),
            fmt(c.iou)
        );
    }
    println!("  global accuracy: {:.3}", report.global_accuracy);

    let d = dice(&gt, &pred)?;
    println!("\nDice: mean {:.3}, per class:", d.mean);
    for (label, score) in &d.per_class {
        println!("  {label:>5}: {}", fmt(*score));
    }

    // The corpus entry point aggregates any number of pairs; a perfect pair
    // next to the shifted one pulls every average up.
    let corpus = vec![(gt.clone(), pred), (gt.clone(), gt)];
    let summary = evaluate_corpus(&corpus, None)?;
    println!("\ncorpus of {} pairs:", summary.pairs);
    for row in &summary.per_class {
        println!(
            "  {} (label {:>3}): accuracy {}, iou {}, mean BF {:.3}",
            row.region,
            row.label,
            fmt(row.accuracy),
            fmt(row.iou),
            row.mean_bf
        );
    }
    println!(
        "  global accuracy {:.3}, mean Dice {:.3}, per-image Dice {:?}",
        summary.global_accuracy,
        summary.mean_dice,
        summary
            .per_image_dice
            .iter()
            .map(|d| (d * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    Ok(())
}
