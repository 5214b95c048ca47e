//! Image resampling: nearest-neighbor, bicubic (Keys, a = -0.5) and
//! Lanczos-3 kernels over a shared destination-to-source geometry.
//!
//! All three algorithms map each destination pixel center back into the
//! source grid with the half-pixel-center convention ([`map_coord`]).
//! Nearest-neighbor copies the closest sample and therefore can never invent
//! values that were absent from the source. The two convolution kernels
//! ([`resize_kernel`]) blend 4 or 6 source samples per axis and are kept
//! real-valued ([`FloatImage`]) until an explicit [`quantize`] step, so ringing
//! and overshoot around hard edges stay observable instead of being silently
//! clamped away.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{FloatImage, GrayImage};

/// The three supported interpolation algorithms.
///
/// `Nearest` is the only kind that cannot introduce new sample values; the
/// other two are convolution kernels with negative lobes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Nearest,
    Bicubic,
    Lanczos3,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            KernelKind::Nearest => "nearest",
            KernelKind::Bicubic => "bicubic",
            KernelKind::Lanczos3 => "lanczos3",
        };
        f.write_str(name)
    }
}

/// Geometry and kernel selection for one resize operation.
///
/// Scale factors are derived as `src / dst` per axis, so values below 1 mean
/// upscaling. All four dimensions must be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResizeSpec {
    pub src_width: u32,
    pub src_height: u32,
    pub dst_width: u32,
    pub dst_height: u32,
    pub kernel: KernelKind,
}

impl ResizeSpec {
    pub fn new(
        src_width: u32,
        src_height: u32,
        dst_width: u32,
        dst_height: u32,
        kernel: KernelKind,
    ) -> Result<Self, ResampleError> {
        let spec = Self {
            src_width,
            src_height,
            dst_width,
            dst_height,
            kernel,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor taking the source geometry from an image.
    pub fn for_image(
        img: &GrayImage,
        dst_width: u32,
        dst_height: u32,
        kernel: KernelKind,
    ) -> Result<Self, ResampleError> {
        Self::new(img.width(), img.height(), dst_width, dst_height, kernel)
    }

    pub fn validate(&self) -> Result<(), ResampleError> {
        if self.src_width == 0
            || self.src_height == 0
            || self.dst_width == 0
            || self.dst_height == 0
        {
            return Err(ResampleError::InvalidSpec {
                src_width: self.src_width,
                src_height: self.src_height,
                dst_width: self.dst_width,
                dst_height: self.dst_height,
            });
        }
        Ok(())
    }

    /// Horizontal source-per-destination ratio.
    pub fn scale_x(&self) -> f64 {
        f64::from(self.src_width) / f64::from(self.dst_width)
    }

    /// Vertical source-per-destination ratio.
    pub fn scale_y(&self) -> f64 {
        f64::from(self.src_height) / f64::from(self.dst_height)
    }

    fn check_source(&self, img: &GrayImage) -> Result<(), ResampleError> {
        if img.width() != self.src_width || img.height() != self.src_height {
            return Err(ResampleError::SourceMismatch {
                expected_width: self.src_width,
                expected_height: self.src_height,
                actual_width: img.width(),
                actual_height: img.height(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error(
        "resize spec dimensions must all be at least 1, got {src_width}x{src_height} -> {dst_width}x{dst_height}"
    )]
    InvalidSpec {
        src_width: u32,
        src_height: u32,
        dst_width: u32,
        dst_height: u32,
    },
    #[error(
        "source image is {actual_width}x{actual_height} but the resize spec expects {expected_width}x{expected_height}"
    )]
    SourceMismatch {
        expected_width: u32,
        expected_height: u32,
        actual_width: u32,
        actual_height: u32,
    },
    #[error("{operation} cannot run with the {actual} kernel")]
    WrongKernel {
        operation: &'static str,
        actual: KernelKind,
    },
}

/// Maps a destination pixel index to a real source coordinate under the
/// half-pixel-center convention: `(dst_index + 0.5) * scale - 0.5`.
///
/// With `scale = src_len / dst_len` both grids share their outer edges; an
/// identity resize maps every center onto itself.
pub fn map_coord(dst_index: u32, scale: f64) -> f64 {
    (f64::from(dst_index) + 0.5) * scale - 0.5
}

/// Keys cubic convolution kernel with a = -0.5 (support 4 samples).
///
/// Piecewise cubic: `(a+2)|t|^3 - (a+3)|t|^2 + 1` on `|t| <= 1` and
/// `a|t|^3 - 5a|t|^2 + 8a|t| - 4a` on `1 < |t| < 2`, zero beyond.
pub fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

fn sinc(x: f64) -> f64 {
    let px = PI * x;
    px.sin() / px
}

/// Three-lobed Lanczos window: `sinc(t) * sinc(t/3)` for `0 < |t| < 3`
/// (support 6 samples), 1 at the origin, zero beyond the third lobe.
pub fn lanczos3_weight(t: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        1.0
    } else if t < 3.0 {
        sinc(t) * sinc(t / 3.0)
    } else {
        0.0
    }
}

/// Resizes by copying, per destination pixel, the nearest source sample
/// (round-half-up on the mapped coordinate, clamped to the source grid).
///
/// Because every output value is a copied input value, the output's set of
/// distinct sample values is always a subset of the input's.
pub fn resize_nearest(img: &GrayImage, spec: &ResizeSpec) -> Result<GrayImage, ResampleError> {
    spec.validate()?;
    spec.check_source(img)?;
    if spec.kernel != KernelKind::Nearest {
        return Err(ResampleError::WrongKernel {
            operation: "resize_nearest",
            actual: spec.kernel,
        });
    }
    let nearest_index = |d: u32, scale: f64, len: u32| -> u32 {
        let rounded = (map_coord(d, scale) + 0.5).floor();
        (rounded.max(0.0) as u32).min(len - 1)
    };
    let xs: Vec<u32> = (0..spec.dst_width)
        .map(|x| nearest_index(x, spec.scale_x(), spec.src_width))
        .collect();
    let ys: Vec<u32> = (0..spec.dst_height)
        .map(|y| nearest_index(y, spec.scale_y(), spec.src_height))
        .collect();
    Ok(GrayImage::from_fn(
        spec.dst_width,
        spec.dst_height,
        |x, y| img.get(xs[x as usize], ys[y as usize]),
    ))
}

/// Per-axis convolution plan: for each destination index, `taps_per`
/// edge-clamped source indices with weights renormalized to sum to 1.
struct AxisTaps {
    taps_per: usize,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

fn axis_taps(src_len: u32, dst_len: u32, kernel: KernelKind) -> AxisTaps {
    let (radius, weight_fn): (i64, fn(f64) -> f64) = match kernel {
        KernelKind::Bicubic => (2, cubic_weight),
        KernelKind::Lanczos3 => (3, lanczos3_weight),
        KernelKind::Nearest => unreachable!("nearest neighbor has no convolution taps"),
    };
    let taps_per = 2 * radius as usize;
    let scale = f64::from(src_len) / f64::from(dst_len);
    let mut indices = Vec::with_capacity(dst_len as usize * taps_per);
    let mut weights = Vec::with_capacity(dst_len as usize * taps_per);
    for d in 0..dst_len {
        let s = map_coord(d, scale);
        let base = s.floor() as i64;
        let start = weights.len();
        let mut sum = 0.0;
        for j in (base - radius + 1)..=(base + radius) {
            // The weight is evaluated at the true (unclamped) offset; only
            // the sample lookup is clamped, which is what replicates edges.
            let w = weight_fn(s - j as f64);
            indices.push(j.clamp(0, i64::from(src_len) - 1) as u32);
            weights.push(w);
            sum += w;
        }
        // Renormalize so each tap set is a weighted average. Interior sets
        // already sum to ~1; edge-clamped sets need this to keep constants.
        for w in &mut weights[start..] {
            *w /= sum;
        }
    }
    AxisTaps {
        taps_per,
        indices,
        weights,
    }
}

/// Resizes with `spec`'s convolution kernel (bicubic or Lanczos-3) as a
/// separable pass per axis, returning the unclamped real-valued result.
///
/// Source samples outside the image are replaced by their nearest edge
/// sample. Output values may undershoot 0 or overshoot 255 next to hard
/// edges; apply [`quantize`] to get back to 8-bit.
pub fn resize_kernel(img: &GrayImage, spec: &ResizeSpec) -> Result<FloatImage, ResampleError> {
    spec.validate()?;
    spec.check_source(img)?;
    if spec.kernel == KernelKind::Nearest {
        return Err(ResampleError::WrongKernel {
            operation: "resize_kernel",
            actual: spec.kernel,
        });
    }
    let h = axis_taps(spec.src_width, spec.dst_width, spec.kernel);
    let v = axis_taps(spec.src_height, spec.dst_height, spec.kernel);
    let src_w = spec.src_width as usize;
    let dst_w = spec.dst_width as usize;
    let dst_h = spec.dst_height as usize;

    // Horizontal pass: src_width x src_height -> dst_width x src_height.
    let src = img.samples();
    let mut mid = vec![0.0f64; dst_w * spec.src_height as usize];
    for y in 0..spec.src_height as usize {
        let row = &src[y * src_w..(y + 1) * src_w];
        let out_row = &mut mid[y * dst_w..(y + 1) * dst_w];
        for (x, out) in out_row.iter_mut().enumerate() {
            let ti = x * h.taps_per;
            let mut acc = 0.0;
            for k in 0..h.taps_per {
                acc += h.weights[ti + k] * f64::from(row[h.indices[ti + k] as usize]);
            }
            *out = acc;
        }
    }

    // Vertical pass: dst_width x src_height -> dst_width x dst_height.
    let mut out = vec![0.0f64; dst_w * dst_h];
    for y in 0..dst_h {
        let ti = y * v.taps_per;
        for x in 0..dst_w {
            let mut acc = 0.0;
            for k in 0..v.taps_per {
                acc += v.weights[ti + k] * mid[v.indices[ti + k] as usize * dst_w + x];
            }
            out[y * dst_w + x] = acc;
        }
    }
    Ok(FloatImage::new(spec.dst_width, spec.dst_height, out)
        .expect("finite inputs and finite weights yield finite samples"))
}

fn quantize_sample(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Rounds half-up per sample, then clamps to the 8-bit range.
pub fn quantize(f: &FloatImage) -> GrayImage {
    GrayImage::from_fn(f.width(), f.height(), |x, y| quantize_sample(f.get(x, y)))
}

/// Runs the resize selected by `spec.kernel` and returns an 8-bit image:
/// nearest neighbor directly, or a kernel pass followed by [`quantize`].
pub fn resize_image(img: &GrayImage, spec: &ResizeSpec) -> Result<GrayImage, ResampleError> {
    match spec.kernel {
        KernelKind::Nearest => resize_nearest(img, spec),
        KernelKind::Bicubic | KernelKind::Lanczos3 => Ok(quantize(&resize_kernel(img, spec)?)),
    }
}
