//! Core raster types and pixel-level primitives shared by every other module.
//!
//! The carriers are [`GrayImage`] (8-bit samples), [`FloatImage`] (unclamped
//! interpolation intermediates) and [`LabelMask`] (a `GrayImage` whose values
//! are supposed to come from a canonical label set). The primitives here
//! (histogram, 3x3 median, saturating subtraction, class extraction) are the
//! building blocks of the mask-filtering pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The default canonical label set: background, intermediate and foreground
/// classes encoded as 0, 128 and 255.
pub const TRI_CLASS_LABELS: [u8; 3] = [0, 128, 255];

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error(
        "sample buffer holds {actual} values, expected {expected} for a {width}x{height} image"
    )]
    SampleCountMismatch {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("canonical label set must be strictly ascending with at least 2 labels, got {0:?}")]
    InvalidLabelSet(Vec<u8>),
}

/// A 2-D grid of 8-bit intensity samples stored in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl GrayImage {
    /// Wraps a row-major sample buffer, validating its length.
    pub fn new(width: u32, height: u32, samples: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if samples.len() != expected {
            return Err(RasterError::SampleCountMismatch {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// A constant image. Panics on zero dimensions.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "dimensions must be at least 1x1");
        Self {
            width,
            height,
            samples: vec![value; width as usize * height as usize],
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "dimensions must be at least 1x1");
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major sample buffer.
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Mirror about the vertical axis: output column x reads input column
    /// `width - 1 - x`.
    pub fn flipped_lr(&self) -> Self {
        let w = self.width;
        Self::from_fn(w, self.height, |x, y| self.get(w - 1 - x, y))
    }
}

/// A 2-D grid of real-valued samples, the intermediate form produced by the
/// extra-pixel kernels before rounding and clamping. Keeping it unclamped is
/// what makes interpolation overshoot observable.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: u32,
    height: u32,
    samples: Vec<f64>,
}

impl FloatImage {
    /// Wraps a row-major buffer, validating length and finiteness.
    pub fn new(width: u32, height: u32, samples: Vec<f64>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if samples.len() != expected {
            return Err(RasterError::SampleCountMismatch {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(RasterError::NonFiniteSample(i));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// Lossless lift of an 8-bit image into the real-valued domain.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            samples: img.samples.iter().map(|&s| f64::from(s)).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }
}

/// A grayscale image interpreted as a class-label mask over a canonical,
/// strictly ascending label set (default `[0, 128, 255]`).
///
/// Construction does not force the samples onto the label set; whether the
/// mask is *canonical* is a checkable property, not an assumption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    image: GrayImage,
    canonical_labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(image: GrayImage, canonical_labels: &[u8]) -> Result<Self, RasterError> {
        if canonical_labels.len() < 2 || canonical_labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RasterError::InvalidLabelSet(canonical_labels.to_vec()));
        }
        Ok(Self {
            image,
            canonical_labels: canonical_labels.to_vec(),
        })
    }

    /// A mask over the default `[0, 128, 255]` label set.
    pub fn tri_class(image: GrayImage) -> Self {
        Self {
            image,
            canonical_labels: TRI_CLASS_LABELS.to_vec(),
        }
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn into_image(self) -> GrayImage {
        self.image
    }

    pub fn canonical_labels(&self) -> &[u8] {
        &self.canonical_labels
    }

    /// True iff every sample belongs to the canonical label set.
    pub fn is_canonical(&self) -> bool {
        self.image
            .samples()
            .iter()
            .all(|s| self.canonical_labels.contains(s))
    }
}

/// Label value to pixel count map. Zero-count bins are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassHistogram {
    bins: BTreeMap<u8, u64>,
}

impl ClassHistogram {
    /// Distinct labels in ascending order.
    pub fn labels(&self) -> Vec<u8> {
        self.bins.keys().copied().collect()
    }

    /// Pixel count for `label`, zero if absent.
    pub fn count(&self, label: u8) -> u64 {
        self.bins.get(&label).copied().unwrap_or(0)
    }

    pub fn num_classes(&self) -> usize {
        self.bins.len()
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, u64)> + '_ {
        self.bins.iter().map(|(&l, &c)| (l, c))
    }

    /// True iff every label present here belongs to `labels`.
    pub fn is_subset_of(&self, labels: &[u8]) -> bool {
        self.bins.keys().all(|l| labels.contains(l))
    }
}

/// Tallies the distinct sample values of an image with their multiplicities.
pub fn class_histogram(mask: &GrayImage) -> ClassHistogram {
    let mut bins = BTreeMap::new();
    for &s in mask.samples() {
        *bins.entry(s).or_insert(0u64) += 1;
    }
    ClassHistogram { bins }
}

/// 3x3 median filter with edge replication.
///
/// Each output pixel is the 5th order statistic of its replicated 3x3
/// neighborhood, so isolated pixels and 1-pixel-wide ribbons vanish while
/// regions at least 2 pixels thick survive.
pub fn median3x3(img: &GrayImage) -> GrayImage {
    let w = img.width() as i64;
    let h = img.height() as i64;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut window = [0u8; 9];
        let mut k = 0;
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let sx = (x as i64 + dx).clamp(0, w - 1);
                let sy = (y as i64 + dy).clamp(0, h - 1);
                window[k] = img.get(sx as u32, sy as u32);
                k += 1;
            }
        }
        window.sort_unstable();
        window[4]
    })
}

/// Per-pixel `max(a - b, 0)`, saturating at zero.
pub fn subtract(a: &GrayImage, b: &GrayImage) -> Result<GrayImage, RasterError> {
    if !a.same_dimensions(b) {
        return Err(RasterError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let samples = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| x.saturating_sub(y))
        .collect();
    Ok(GrayImage {
        width: a.width(),
        height: a.height(),
        samples,
    })
}

/// Isolates one class channel: pixels equal to `label` keep it, everything
/// else becomes 0.
pub fn extract_class(mask: &GrayImage, label: u8) -> GrayImage {
    let samples = mask
        .samples()
        .iter()
        .map(|&s| if s == label { label } else { 0 })
        .collect();
    GrayImage {
        width: mask.width(),
        height: mask.height(),
        samples,
    }
}
