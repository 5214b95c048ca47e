//! Spurious-class-label detection and removal for resampled masks.
//!
//! Kernel-based resizing of a tri-class mask (labels 0/128/255) produces a
//! halo of in-between values along every class boundary. The naive fix
//! ([`eq1_threshold`]) snaps each pixel to the nearest class by global
//! thresholding, but near hard 0/255 edges the interpolated values pass
//! through the middle band and the threshold mislabels them 128 — it trades
//! many small spurious classes for one plausible-looking fake one.
//!
//! [`remove_extra_labels`] fixes that with a five-step pipeline: threshold,
//! isolate the middle class, subtract it out, median-filter the isolated
//! channel to reject thin ribbons, and recompose — rejected 128 pixels are
//! reassigned to whichever outer class their pre-threshold value was closer
//! to. [`audit`] reports whether a mask needs any of this, and
//! [`mask_resize`] wires the strategies into the resize operations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{
    class_histogram, extract_class, median3x3, subtract, ClassHistogram, FloatImage, GrayImage,
    LabelMask, RasterError, TRI_CLASS_LABELS,
};
use crate::resample::{
    quantize, resize_kernel, resize_nearest, KernelKind, ResampleError, ResizeSpec,
};

/// How a kernel-resized mask is pushed back onto its canonical label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterStrategy {
    /// Quantize only; spurious labels are kept (useful to measure the damage).
    None,
    /// Global three-way threshold per pixel. Cheap, but mislabels boundary
    /// pixels of hard 0/255 edges as 128.
    Eq1,
    /// The full five-step pipeline; see [`remove_extra_labels`].
    FiveStep,
}

impl std::fmt::Display for FilterStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FilterStrategy::None => "none",
            FilterStrategy::Eq1 => "eq1",
            FilterStrategy::FiveStep => "five-step",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum MaskFilterError {
    #[error(
        "the {strategy} filter only supports the canonical label set {{0, 128, 255}}, got {labels:?}"
    )]
    UnsupportedLabelSet {
        strategy: FilterStrategy,
        labels: Vec<u8>,
    },
    #[error("input mask is not canonical; unexpected labels: {extra:?}")]
    NonCanonicalInput { extra: Vec<u8> },
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// One label found outside the expected set, with its pixel count and the
/// first coordinate (x, y) where it occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraLabel {
    pub label: u8,
    pub count: u64,
    pub example: (u32, u32),
}

/// Result of checking a mask's sample values against an expected label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub expected_labels: Vec<u8>,
    pub found: ClassHistogram,
    pub extra: Vec<ExtraLabel>,
    pub is_canonical: bool,
}

/// Checks every pixel of `mask` against `expected`, reporting each stray
/// label with its count and one example coordinate. A mask using only a
/// subset of the expected labels counts as canonical.
pub fn audit(mask: &GrayImage, expected: &[u8]) -> AuditReport {
    assert!(!expected.is_empty(), "expected label set must be non-empty");
    let found = class_histogram(mask);
    let mut extra = Vec::new();
    for (label, count) in found.iter() {
        if expected.contains(&label) {
            continue;
        }
        let example = first_occurrence(mask, label);
        extra.push(ExtraLabel {
            label,
            count,
            example,
        });
    }
    AuditReport {
        expected_labels: expected.to_vec(),
        is_canonical: extra.is_empty(),
        found,
        extra,
    }
}

fn first_occurrence(mask: &GrayImage, label: u8) -> (u32, u32) {
    let idx = mask
        .samples()
        .iter()
        .position(|&s| s == label)
        .expect("label comes from this mask's histogram");
    let w = mask.width() as usize;
    ((idx % w) as u32, (idx / w) as u32)
}

/// Global three-way threshold: values below 64 become 0, values above 192
/// become 255, everything in between (the boundaries 64 and 192 included)
/// becomes 128. Idempotent, and the identity on already-canonical masks.
pub fn eq1_threshold(mask: &GrayImage) -> LabelMask {
    let image = GrayImage::from_fn(mask.width(), mask.height(), |x, y| {
        let v = mask.get(x, y);
        if v < 64 {
            0
        } else if v > 192 {
            255
        } else {
            128
        }
    });
    LabelMask::tri_class(image)
}

/// Removes spurious class labels from an unquantized interpolation result,
/// returning a mask whose labels are guaranteed to lie in {0, 128, 255}.
///
/// The pipeline runs five steps:
///
/// 1. `S1` — quantize the interpolated samples to 8 bits.
/// 2. `S2` — snap every pixel to {0, 128, 255} with [`eq1_threshold`].
/// 3. `S3` — subtract the isolated 128 channel `B` from `S2`, leaving a pure
///    0/255 image with holes where 128 stood.
/// 4. `S4` — 3x3 median filter on `B`: thin 128 ribbons (the thresholding
///    artifact along hard 0/255 edges) vanish, genuine thick 128 regions
///    survive.
/// 5. `S5` — recompose: pixels the median kept stay 128; pixels the median
///    rejected go to 0 or 255 depending on which side of 128 their `S1`
///    value fell; everything else comes from `S3`.
pub fn remove_extra_labels(interp: &FloatImage) -> LabelMask {
    let s1 = quantize(interp);
    let s2 = eq1_threshold(&s1);
    let b = extract_class(s2.image(), 128);
    let s3 = subtract(s2.image(), &b).expect("same dimensions by construction");
    let s4 = median3x3(&b);
    let s5 = GrayImage::from_fn(s1.width(), s1.height(), |x, y| {
        if s4.get(x, y) == 128 {
            128
        } else if b.get(x, y) == 128 {
            // The median rejected this 128 pixel as spurious; send it to the
            // outer class its unthresholded value was closer to.
            if s1.get(x, y) < 128 {
                0
            } else {
                255
            }
        } else {
            s3.get(x, y)
        }
    });
    LabelMask::tri_class(s5)
}

fn require_tri_class(mask: &LabelMask, strategy: FilterStrategy) -> Result<(), MaskFilterError> {
    if mask.canonical_labels() != TRI_CLASS_LABELS {
        return Err(MaskFilterError::UnsupportedLabelSet {
            strategy,
            labels: mask.canonical_labels().to_vec(),
        });
    }
    Ok(())
}

/// Resizes a canonical mask, routing the result through the requested filter
/// strategy.
///
/// Nearest-neighbor resizing copies labels and can never invent new ones, so
/// the strategy is ignored for it. The kernel resizes go through
/// [`resize_kernel`] and then either plain quantization (`None`),
/// [`eq1_threshold`] (`Eq1`) or [`remove_extra_labels`] (`FiveStep`); the
/// latter two are only defined for the {0, 128, 255} label set.
pub fn mask_resize(
    mask: &LabelMask,
    spec: &ResizeSpec,
    strategy: FilterStrategy,
) -> Result<LabelMask, MaskFilterError> {
    if !mask.is_canonical() {
        let extra = class_histogram(mask.image())
            .labels()
            .into_iter()
            .filter(|l| !mask.canonical_labels().contains(l))
            .collect();
        return Err(MaskFilterError::NonCanonicalInput { extra });
    }
    match spec.kernel {
        KernelKind::Nearest => {
            let resized = resize_nearest(mask.image(), spec)?;
            Ok(LabelMask::new(resized, mask.canonical_labels())?)
        }
        KernelKind::Bicubic | KernelKind::Lanczos3 => {
            let interp = resize_kernel(mask.image(), spec)?;
            match strategy {
                FilterStrategy::None => {
                    Ok(LabelMask::new(quantize(&interp), mask.canonical_labels())?)
                }
                FilterStrategy::Eq1 => {
                    require_tri_class(mask, strategy)?;
                    Ok(eq1_threshold(&quantize(&interp)))
                }
                FilterStrategy::FiveStep => {
                    require_tri_class(mask, strategy)?;
                    Ok(remove_extra_labels(&interp))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resample::resize_image;

    /// Vertical 0/255 step: columns left of `edge` are 0, the rest 255.
    fn step_mask(w: u32, h: u32, edge: u32) -> LabelMask {
        LabelMask::tri_class(GrayImage::from_fn(
            w,
            h,
            |x, _| {
                if x < edge {
                    0
                } else {
                    255
                }
            },
        ))
    }

    /// Vertical three-band mask: 0 | 128 | 255 with the given band edges.
    fn band_mask(w: u32, h: u32, e1: u32, e2: u32) -> LabelMask {
        LabelMask::tri_class(GrayImage::from_fn(w, h, |x, _| {
            if x < e1 {
                0
            } else if x < e2 {
                128
            } else {
                255
            }
        }))
    }

    fn count_label(img: &GrayImage, label: u8) -> u64 {
        class_histogram(img).count(label)
    }

    #[test]
    fn eq1_maps_bands_with_strict_boundaries() {
        let row: Vec<u8> = vec![0, 63, 64, 65, 128, 191, 192, 193, 254, 255];
        let mask = GrayImage::new(row.len() as u32, 1, row).unwrap();
        let out = eq1_threshold(&mask);
        assert_eq!(
            out.image().samples(),
            &[0, 0, 128, 128, 128, 128, 128, 255, 255, 255]
        );
    }

    #[test]
    fn eq1_is_idempotent_and_fixes_canonical_masks() {
        let mask = GrayImage::from_fn(16, 16, |x, y| ((x * 53 + y * 19) % 256) as u8);
        let once = eq1_threshold(&mask);
        let twice = eq1_threshold(once.image());
        assert_eq!(once, twice);

        let canonical = band_mask(12, 6, 4, 8);
        assert_eq!(&eq1_threshold(canonical.image()), &canonical);
    }

    #[test]
    fn eq1_mislabels_step_boundary_pixels_as_128() {
        // Upscaling 8 -> 18 puts one destination column exactly halfway
        // between source samples; its interpolated value lands near 127.5,
        // squarely inside the threshold's middle band. This is the failure
        // mode the five-step pipeline exists to fix.
        let mask = step_mask(8, 8, 2);
        let spec = ResizeSpec::new(8, 8, 18, 8, KernelKind::Bicubic).unwrap();
        let quantized = quantize(&resize_kernel(mask.image(), &spec).unwrap());
        let thresholded = eq1_threshold(&quantized);
        assert_eq!(
            count_label(thresholded.image(), 128),
            8,
            "one full-height column should be mislabeled"
        );
    }

    #[test]
    fn five_step_removes_the_eq1_failure_column() {
        let mask = step_mask(8, 8, 2);
        let spec = ResizeSpec::new(8, 8, 18, 8, KernelKind::Bicubic).unwrap();
        let interp = resize_kernel(mask.image(), &spec).unwrap();
        let cleaned = remove_extra_labels(&interp);
        assert_eq!(count_label(cleaned.image(), 128), 0);
        assert!(cleaned.is_canonical());
        // The step itself must survive: both outer classes still present.
        assert!(count_label(cleaned.image(), 0) > 0);
        assert!(count_label(cleaned.image(), 255) > 0);
    }

    #[test]
    fn five_step_removes_isolated_corner_artifacts() {
        // A 255 quadrant meeting a 0 background: bicubic doubling leaves a
        // single quantized 162 at the convex corner, which the threshold
        // turns into an isolated 128 pixel. The median rejects it.
        let mask = LabelMask::tri_class(GrayImage::from_fn(8, 8, |x, y| {
            if x >= 4 && y >= 4 {
                255
            } else {
                0
            }
        }));
        let spec = ResizeSpec::new(8, 8, 16, 16, KernelKind::Bicubic).unwrap();
        let interp = resize_kernel(mask.image(), &spec).unwrap();

        let naive = eq1_threshold(&quantize(&interp));
        assert!(
            count_label(naive.image(), 128) > 0,
            "thresholding alone should leave corner 128s"
        );

        let cleaned = remove_extra_labels(&interp);
        assert_eq!(count_label(cleaned.image(), 128), 0);
    }

    #[test]
    fn five_step_preserves_thick_middle_band() {
        let mask = band_mask(8, 8, 3, 6);
        let spec = ResizeSpec::new(8, 8, 16, 16, KernelKind::Bicubic).unwrap();
        let interp = resize_kernel(mask.image(), &spec).unwrap();
        let cleaned = remove_extra_labels(&interp);
        assert!(cleaned.is_canonical());
        let hist = class_histogram(cleaned.image());
        assert_eq!(hist.labels(), vec![0, 128, 255]);

        // Compare the surviving 128 area against the label-preserving
        // nearest-neighbor reference; boundary shifts may move a ring of
        // pixels but not eat the band.
        let nn_spec = ResizeSpec::new(8, 8, 16, 16, KernelKind::Nearest).unwrap();
        let reference = resize_nearest(mask.image(), &nn_spec).unwrap();
        let got = count_label(cleaned.image(), 128) as f64;
        let want = count_label(&reference, 128) as f64;
        assert!(
            (got - want).abs() / want <= 0.15,
            "128 count {got} deviates more than 15% from reference {want}"
        );
    }

    #[test]
    fn five_step_on_canonical_interp_is_plain_quantization() {
        let constant = GrayImage::filled(6, 6, 128);
        let spec = ResizeSpec::new(6, 6, 12, 12, KernelKind::Bicubic).unwrap();
        let interp = resize_kernel(&constant, &spec).unwrap();
        let cleaned = remove_extra_labels(&interp);
        assert_eq!(cleaned.image(), &quantize(&interp));
    }

    #[test]
    fn audit_flags_extra_labels_with_coordinates() {
        let mut samples = vec![0u8; 16];
        samples[5] = 77;
        samples[6] = 77;
        samples[9] = 255;
        let mask = GrayImage::new(4, 4, samples).unwrap();
        let report = audit(&mask, &TRI_CLASS_LABELS);
        assert!(!report.is_canonical);
        assert_eq!(report.extra.len(), 1);
        assert_eq!(report.extra[0].label, 77);
        assert_eq!(report.extra[0].count, 2);
        assert_eq!(report.extra[0].example, (1, 1));
    }

    #[test]
    fn audit_accepts_subsets_of_the_expected_labels() {
        let constant = GrayImage::filled(4, 4, 0);
        let report = audit(&constant, &TRI_CLASS_LABELS);
        assert!(report.is_canonical);
        assert!(report.extra.is_empty());
        assert_eq!(report.found.labels(), vec![0]);
    }

    #[test]
    fn audit_detects_kernel_resize_damage() {
        let mask = band_mask(16, 16, 5, 11);
        let nn = ResizeSpec::new(16, 16, 32, 32, KernelKind::Nearest).unwrap();
        let bic = ResizeSpec::new(16, 16, 32, 32, KernelKind::Bicubic).unwrap();

        let nn_out = resize_image(mask.image(), &nn).unwrap();
        assert!(audit(&nn_out, &TRI_CLASS_LABELS).is_canonical);

        let bic_out = resize_image(mask.image(), &bic).unwrap();
        let report = audit(&bic_out, &TRI_CLASS_LABELS);
        assert!(!report.is_canonical);
        assert!(report.found.num_classes() > 3);
    }

    #[test]
    fn mask_resize_dispatches_by_kernel_and_strategy() {
        let mask = band_mask(16, 16, 5, 11);
        for strategy in [
            FilterStrategy::None,
            FilterStrategy::Eq1,
            FilterStrategy::FiveStep,
        ] {
            let spec = ResizeSpec::new(16, 16, 32, 32, KernelKind::Nearest).unwrap();
            let out = mask_resize(&mask, &spec, strategy).unwrap();
            assert!(out.is_canonical(), "nearest is label-preserving");
        }

        let spec = ResizeSpec::new(16, 16, 32, 32, KernelKind::Bicubic).unwrap();
        let unfiltered = mask_resize(&mask, &spec, FilterStrategy::None).unwrap();
        assert!(!unfiltered.is_canonical());
        let filtered = mask_resize(&mask, &spec, FilterStrategy::FiveStep).unwrap();
        assert!(filtered.is_canonical());
    }

    #[test]
    fn mask_resize_rejects_non_tri_class_strategies() {
        let two_label = LabelMask::new(
            GrayImage::from_fn(8, 8, |x, _| if x < 4 { 0 } else { 255 }),
            &[0, 255],
        )
        .unwrap();
        let spec = ResizeSpec::new(8, 8, 16, 16, KernelKind::Bicubic).unwrap();
        assert!(mask_resize(&two_label, &spec, FilterStrategy::None).is_ok());
        assert!(matches!(
            mask_resize(&two_label, &spec, FilterStrategy::FiveStep),
            Err(MaskFilterError::UnsupportedLabelSet { .. })
        ));
        assert!(matches!(
            mask_resize(&two_label, &spec, FilterStrategy::Eq1),
            Err(MaskFilterError::UnsupportedLabelSet { .. })
        ));
    }

    #[test]
    fn mask_resize_rejects_non_canonical_input() {
        let dirty = LabelMask::tri_class(GrayImage::from_fn(8, 8, |x, y| ((x + y) * 11) as u8));
        let spec = ResizeSpec::new(8, 8, 16, 16, KernelKind::Nearest).unwrap();
        assert!(matches!(
            mask_resize(&dirty, &spec, FilterStrategy::None),
            Err(MaskFilterError::NonCanonicalInput { .. })
        ));
    }

    #[test]
    fn five_step_is_deterministic() {
        let mask = band_mask(16, 16, 5, 11);
        let spec = ResizeSpec::new(16, 16, 37, 29, KernelKind::Lanczos3).unwrap();
        let interp = resize_kernel(mask.image(), &spec).unwrap();
        let a = remove_extra_labels(&interp);
        let b = remove_extra_labels(&interp);
        assert_eq!(a, b);
    }
}
