//! The five-step cleanup, stage by stage, and why the one-equation
//! threshold is not enough.
//!
//! The naive fix for interpolation-made labels is a single global threshold:
//! everything below 64 becomes 0, everything from 64 to 191 becomes 128,
//! the rest 255. That restores the canonical label set, but it hallucinates
//! a 128 band along every 0/255 boundary — on a mask with no middle class
//! at all, the "cleaned" result suddenly contains one.
//!
//! The five-step pipeline instead isolates the middle class, median-filters
//! it to drop thin boundary slivers, and resolves the removed pixels back to
//! 0 or 255 by re-thresholding the quantized plane at 128.
//!
//! Run with: cargo run --example five_step_cleanup

use maskscale::maskfilter::{eq1_threshold, remove_extra_labels};
use maskscale::raster::class_histogram;
use maskscale::resample::resize_kernel;
use maskscale::{GrayImage, KernelKind, ResizeSpec};

fn histogram_line(tag: &str, img: &GrayImage) {
    let h = class_histogram(img);
    let bins: Vec<String> = h.iter().map(|(l, c)| format!("{l}:{c}")).collect();
    println!("{tag:<26} {} values | {}", h.num_classes(), bins.join(" "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A two-class mask: 255 disc on 0 background. No 128 anywhere.
    let mask = GrayImage::from_fn(24, 24, |x, y| {
        let (dx, dy) = (x as f64 - 11.5, y as f64 - 11.5);
        if dx * dx + dy * dy < 64.0 {
            255
        } else {
            0
        }
    });
    histogram_line("source (two classes)", &mask);

    // Upscale 2x with Lanczos-3 and keep the raw float plane. Doubling is
    // the scale this pipeline is built for: the threshold's phantom middle
    // band is then at most one pixel wide, exactly what a 3x3 median kills.
    let spec = ResizeSpec::for_image(&mask, 48, 48, KernelKind::Lanczos3)?;
    let interp = resize_kernel(&mask, &spec)?;

    let quantized = maskscale::resample::quantize(&interp);
    histogram_line("quantized interpolation", &quantized);

    // Baseline: one global threshold.
    let eq1 = eq1_threshold(&quantized);
    histogram_line("single threshold", eq1.image());
    let fake_middle = class_histogram(eq1.image()).count(128);
    println!(
        "  -> canonical again, but {fake_middle} pixels now claim the middle class that the source never had"
    );

    // The five-step pipeline on the same float plane.
    let fixed = remove_extra_labels(&interp);
    histogram_line("five-step pipeline", fixed.image());
    assert_eq!(class_histogram(fixed.image()).count(128), 0);
    println!("  -> canonical, and the phantom middle class is gone");

    // With no middle-class pixels left, every later stage degenerates to
    // the plain threshold, so a second pass reproduces the result exactly.
    let again = remove_extra_labels(&maskscale::FloatImage::from_gray(fixed.image()));
    assert_eq!(again.image(), fixed.image());
    println!("\nre-running the pipeline on this output is a no-op");
    Ok(())
}
