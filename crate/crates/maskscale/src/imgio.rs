//! Strict 8-bit grayscale raster I/O.
//!
//! Masks are meaning-bearing label images, so reads refuse anything that is
//! not natively 8-bit single-channel — silently converting RGB or 16-bit
//! data would corrupt label values. Writes go through a temporary file in
//! the destination directory followed by a rename, so readers never observe
//! a half-written raster.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error)]
pub enum ImgIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: expected 8-bit grayscale, found {color}")]
    NotGrayscale { path: PathBuf, color: String },
    #[error("{path}: image has no pixels")]
    EmptyImage { path: PathBuf },
    #[error("{path}: unsupported extension, expected .png or .pgm")]
    UnsupportedExtension { path: PathBuf },
    #[error("{path}: not a directory")]
    NotADirectory { path: PathBuf },
}

/// The two on-disk raster formats this toolkit reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Png,
    /// Binary (P5) portable graymap with maxval 255.
    Pgm,
}

impl RasterFormat {
    pub fn from_path(path: &Path) -> Result<Self, ImgIoError> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => Ok(RasterFormat::Png),
            Some("pgm") => Ok(RasterFormat::Pgm),
            _ => Err(ImgIoError::UnsupportedExtension {
                path: path.to_path_buf(),
            }),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            RasterFormat::Png => "png",
            RasterFormat::Pgm => "pgm",
        }
    }
}

/// Reads an 8-bit grayscale PNG or PGM. Any other pixel layout is an error.
pub fn read_gray(path: &Path) -> Result<GrayImage, ImgIoError> {
    let at = |source| ImgIoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let decoded = ImageReader::open(path)
        .map_err(at)?
        .decode()
        .map_err(|source| ImgIoError::Decode {
            path: path.to_path_buf(),
            source,
        })?;
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(w, h, buf.into_raw()).map_err(|_| ImgIoError::EmptyImage {
                path: path.to_path_buf(),
            })
        }
        other => Err(ImgIoError::NotGrayscale {
            path: path.to_path_buf(),
            color: format!("{:?}", other.color()),
        }),
    }
}

/// Writes an image as PNG or binary PGM depending on the file extension,
/// atomically (temp file + rename).
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<(), ImgIoError> {
    let format = RasterFormat::from_path(path)?;
    let io_err = |source| ImgIoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    {
        let mut writer = BufWriter::new(tmp.as_file_mut());
        let encode_err = |source| ImgIoError::Encode {
            path: path.to_path_buf(),
            source,
        };
        match format {
            RasterFormat::Png => PngEncoder::new(&mut writer)
                .write_image(
                    img.samples(),
                    img.width(),
                    img.height(),
                    ExtendedColorType::L8,
                )
                .map_err(encode_err)?,
            RasterFormat::Pgm => PnmEncoder::new(&mut writer)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .write_image(
                    img.samples(),
                    img.width(),
                    img.height(),
                    ExtendedColorType::L8,
                )
                .map_err(encode_err)?,
        }
        writer.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// All PNG/PGM files directly inside `dir`, sorted by file name.
pub fn list_rasters(dir: &Path) -> Result<Vec<PathBuf>, ImgIoError> {
    if !dir.is_dir() {
        return Err(ImgIoError::NotADirectory {
            path: dir.to_path_buf(),
        });
    }
    let at = |source| ImgIoError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(at)? {
        let path = entry.map_err(at)?.path();
        if path.is_file() && RasterFormat::from_path(&path).is_ok() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
