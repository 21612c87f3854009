//! Grayscale screenshot loading for the toy embedder.
//!
//! Any PGM file (plain `P2` or binary `P5`, 8 or 16 bit) is accepted; samples
//! are rescaled by the file's maximum value into `[0, 1]`.

use std::path::Path;

use uitrace_core::featurize::GrayImage;

use crate::error::{Error, Result};

/// Decodes a PGM file into an intensity grid.
pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let gray = decoded.to_luma32f();
    let (w, h) = gray.dimensions();
    let pixels = gray
        .into_raw()
        .into_iter()
        .map(|v| f64::from(v).clamp(0.0, 1.0))
        .collect();
    Ok(GrayImage::new(w as usize, h as usize, pixels)?)
}
