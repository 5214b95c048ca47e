//! Auditing a resized mask for spurious class labels.
//!
//! A tri-class mask (0 = background, 128 = middle class, 255 = main class)
//! is resized with a bicubic kernel and no cleanup. The audit then lists
//! every label outside the canonical set, with its pixel count and a sample
//! coordinate — exactly what the `maskscale audit` subcommand reports as
//! JSON.
//!
//! Run with: cargo run --example audit_labels

use maskscale::maskfilter::{audit, mask_resize};
use maskscale::raster::class_histogram;
use maskscale::{FilterStrategy, GrayImage, LabelMask, ResizeSpec, TRI_CLASS_LABELS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Nested regions: a 255 block with a 128 core on a 0 background.
    let mask = LabelMask::tri_class(GrayImage::from_fn(32, 32, |x, y| {
        let inside = |lo, hi| x >= lo && x < hi && y >= lo && y < hi;
        if inside(12, 20) {
            128
        } else if inside(6, 26) {
            255
        } else {
            0
        }
    }));
    println!(
        "source 32x32 mask histogram: {:?}",
        class_histogram(mask.image()).iter().collect::<Vec<_>>()
    );

    let spec = ResizeSpec::for_image(mask.image(), 96, 96, maskscale::KernelKind::Bicubic)?;
    let resized = mask_resize(&mask, &spec, FilterStrategy::None)?;

    let report = audit(resized.image(), &TRI_CLASS_LABELS);
    println!(
        "\nafter bicubic resize to 96x96 with no filtering: {} distinct values",
        report.found.num_classes()
    );
    println!("canonical: {}", report.is_canonical);
    println!("spurious labels: {}", report.extra.len());
    println!("  label  count  first seen at");
    for extra in report.extra.iter().take(10) {
        println!(
            "  {:>5}  {:>5}  ({}, {})",
            extra.label, extra.count, extra.example.0, extra.example.1
        );
    }
    if report.extra.len() > 10 {
        println!("  ... and {} more", report.extra.len() - 10);
    }

    // The same resize through the five-step filter keeps the label set
    // canonical; the audit comes back clean.
    let filtered = mask_resize(&mask, &spec, FilterStrategy::FiveStep)?;
    let clean = audit(filtered.image(), &TRI_CLASS_LABELS);
    println!(
        "\nsame resize with the five-step filter: canonical = {}, histogram = {:?}",
        clean.is_canonical,
        clean.found.iter().collect::<Vec<_>>()
    );
    Ok(())
}
