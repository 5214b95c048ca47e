//! Resizing one image with all three kernels and comparing their behavior.
//!
//! Nearest neighbor copies existing samples, so the value set never grows.
//! Bicubic and Lanczos-3 average neighborhoods with negative side lobes, so
//! a hard 0/255 edge comes back with brand-new intermediate values and even
//! overshoot beyond the input range (visible before quantization).
//!
//! Run with: cargo run --example resize_kernels

use maskscale::resample::{resize_image, resize_kernel, ResizeSpec};
use maskscale::{GrayImage, KernelKind};

fn value_set(img: &GrayImage) -> Vec<u8> {
    let mut values: Vec<u8> = img.samples().to_vec();
    values.sort_unstable();
    values.dedup();
    values
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A hard vertical step: 0 on the left half, 255 on the right.
    let step = GrayImage::from_fn(16, 16, |x, _| if x < 8 { 0 } else { 255 });
    println!("source: 16x16 step edge, values {:?}", value_set(&step));

    for kernel in [
        KernelKind::Nearest,
        KernelKind::Bicubic,
        KernelKind::Lanczos3,
    ] {
        let spec = ResizeSpec::for_image(&step, 32, 32, kernel)?;
        let out = resize_image(&step, &spec)?;
        let values = value_set(&out);
        println!("\n{kernel} to 32x32:");
        println!("  distinct values: {}", values.len());
        println!("  value set:       {values:?}");

        // The kernel resizers expose their pre-quantization plane; that is
        // where the overshoot lives.
        if kernel != KernelKind::Nearest {
            let plane = resize_kernel(&step, &spec)?;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for y in 0..plane.height() {
                for x in 0..plane.width() {
                    lo = lo.min(plane.get(x, y));
                    hi = hi.max(plane.get(x, y));
                }
            }
            println!("  raw range:       [{lo:.4}, {hi:.4}] (input was [0, 255])");
        }
    }

    // Identity resizes are bit-exact for every kernel: at scale 1 the
    // half-pixel-center mapping lands every tap weight on a single source
    // sample.
    let ramp = GrayImage::from_fn(9, 7, |x, y| (x * 20 + y * 11) as u8);
    for kernel in [
        KernelKind::Nearest,
        KernelKind::Bicubic,
        KernelKind::Lanczos3,
    ] {
        let spec = ResizeSpec::for_image(&ramp, 9, 7, kernel)?;
        assert_eq!(resize_image(&ramp, &spec)?, ramp);
    }
    println!("\nidentity resize is bit-exact under all three kernels");
    Ok(())
}
