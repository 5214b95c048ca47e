//! Resampling and evaluation toolkit for grayscale images and class-label
//! segmentation masks.
//!
//! Resizing a mask with an averaging kernel (bicubic, Lanczos-3) invents
//! intensity values that never existed in the source, so a tri-class label
//! image comes back with dozens of spurious "classes" along every region
//! boundary. This crate bundles everything needed to study and fix that:
//!
//! - [`resample`] — nearest-neighbor, bicubic and Lanczos-3 resizing over a
//!   shared half-pixel-center geometry, with the kernel output kept
//!   real-valued until an explicit quantization step.
//! - [`maskfilter`] — a class-label audit, the naive global threshold
//!   baseline, and a five-step threshold/median/subtraction pipeline that
//!   removes spurious labels while preserving genuine thin classes.
//! - [`metrics`] — segmentation evaluation: per-class accuracy, IoU,
//!   boundary-F1, Dice and global accuracy over mask corpora.
//! - [`quantcompare`] — three options for relating manual and automated
//!   quantification tables, plus a winner tally across tables.
//! - [`dataset`] — corpus scanning, seeded train/validation/test splitting,
//!   reflection/translation augmentation, and batch resized export.
//! - [`imgio`] — strict 8-bit grayscale PNG/PGM reading and atomic writing.
//!
//! The `maskscale` binary exposes the same functionality as subcommands; the
//! `examples/` directory walks through each capability in library form.

pub mod cli;
pub mod dataset;
pub mod imgio;
pub mod maskfilter;
pub mod metrics;
pub mod quantcompare;
pub mod raster;
pub mod resample;

pub use maskfilter::{AuditReport, FilterStrategy};
pub use raster::{ClassHistogram, FloatImage, GrayImage, LabelMask, TRI_CLASS_LABELS};
pub use resample::{KernelKind, ResizeSpec};
