//! Screenshot featurization.
//!
//! Real UI embedders run out of process; their output enters through trace
//! files. [`ToyEmbedder`] is a deterministic stand-in: it average-pools a
//! grayscale image onto a 16x16 grid (row-major) and L2-normalizes the result.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::trace::{Embedding, Trace, TraceError, TraceMeta};

/// Side length of the toy embedder's pooling grid.
pub const TOY_GRID: usize = 16;

/// Output dimension of the toy embedder.
pub const TOY_DIM: usize = TOY_GRID * TOY_GRID;

/// Featurization failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    /// Pixel buffer length does not match `width * height`.
    #[error("pixel buffer has {found} values, expected {expected}")]
    BufferSize {
        /// `width * height`.
        expected: usize,
        /// Values provided.
        found: usize,
    },
    /// Intensity outside `[0, 1]` or not finite.
    #[error("pixel {index} has intensity {value}, expected a value in [0, 1]")]
    Intensity {
        /// Pixel offset.
        index: usize,
        /// Offending value.
        value: f64,
    },
    /// Image below the toy embedder's minimum size.
    #[error("image is {width}x{height}, minimum is {TOY_GRID}x{TOY_GRID}")]
    TooSmall {
        /// Width in pixels.
        width: usize,
        /// Height in pixels.
        height: usize,
    },
    /// An all-black image pools to the zero vector.
    #[error("image is entirely black and has no direction")]
    Black,
    /// No images were supplied.
    #[error("no images to embed")]
    NoImages,
    /// Building the trace failed.
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A grayscale image with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Wraps a row-major pixel buffer.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, EmbedError> {
        if pixels.len() != width * height {
            return Err(EmbedError::BufferSize {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if let Some((index, &value)) = pixels.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(EmbedError::Intensity { index, value });
        }
        Ok(Self { width, height, pixels })
    }

    /// An image filled with one intensity.
    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self, EmbedError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Width in pixels.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Height in pixels.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Intensity at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Row-major pixels.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}

/// Describes an embedder's output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedderSpec {
    /// Human-readable name.
    pub name: String,
    /// Output dimension `D`, at least 1.
    pub output_dim: usize,
    /// Whether outputs have unit norm.
    pub normalized: bool,
}

/// Maps a screenshot to a fixed-length vector.
pub trait Embedder {
    /// Output description.
    fn spec(&self) -> EmbedderSpec;

    /// Embeds one image.
    fn embed(&self, image: &GrayImage) -> Result<Embedding, EmbedError>;
}

/// Deterministic 16x16 average-pool embedder.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyEmbedder;

impl Embedder for ToyEmbedder {
    fn spec(&self) -> EmbedderSpec {
        EmbedderSpec {
            name: String::from("toy-avgpool-16x16"),
            output_dim: TOY_DIM,
            normalized: true,
        }
    }

    fn embed(&self, image: &GrayImage) -> Result<Embedding, EmbedError> {
        toy_embed(image)
    }
}

/// Average-pools `image` onto a 16x16 grid and normalizes to unit length.
///
/// Cell `(r, c)` covers rows `r*H/16 .. (r+1)*H/16` and columns
/// `c*W/16 .. (c+1)*W/16` (integer division), so every pixel lands in
/// exactly one cell whatever the aspect ratio.
pub fn toy_embed(image: &GrayImage) -> Result<Embedding, EmbedError> {
    let (w, h) = (image.width, image.height);
    if w < TOY_GRID || h < TOY_GRID {
        return Err(EmbedError::TooSmall { width: w, height: h });
    }
    let mut pooled = Vec::with_capacity(TOY_DIM);
    for r in 0..TOY_GRID {
        let (y0, y1) = (r * h / TOY_GRID, (r + 1) * h / TOY_GRID);
        for c in 0..TOY_GRID {
            let (x0, x1) = (c * w / TOY_GRID, (c + 1) * w / TOY_GRID);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += image.pixels[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            pooled.push(sum / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    let embedding = Embedding::new(pooled)?;
    let norm = embedding.norm();
    if norm == 0.0 {
        return Err(EmbedError::Black);
    }
    Ok(Embedding::new(embedding.as_slice().iter().map(|v| v / norm).collect())?)
}

/// Embeds an ordered list of screenshots into a trace with metadata `meta`.
pub fn embed_trace<E: Embedder + ?Sized>(
    images: &[GrayImage],
    embedder: &E,
    meta: TraceMeta,
) -> Result<Trace, EmbedError> {
    if images.is_empty() {
        return Err(EmbedError::NoImages);
    }
    let frames = images
        .iter()
        .map(|img| embedder.embed(img))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trace::new(meta, frames)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_is_uniform() {
        let img = GrayImage::constant(32, 20, 0.5).unwrap();
        let e = toy_embed(&img).unwrap();
        assert_eq!(e.dim(), 256);
        assert!(e.as_slice().iter().all(|&v| v == 1.0 / 16.0));
    }

    #[test]
    fn single_white_pixel_is_first_basis_vector() {
        let mut px = vec![0.0; 256];
        px[0] = 1.0;
        let e = toy_embed(&GrayImage::new(16, 16, px).unwrap()).unwrap();
        assert_eq!(e.as_slice()[0], 1.0);
        assert!(e.as_slice()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn positive_scale_does_not_change_embedding() {
        let px: Vec<f64> = (0..24 * 18).map(|i| (i % 7) as f64 / 14.0).collect();
        let doubled: Vec<f64> = px.iter().map(|v| (v * 2.0).min(1.0)).collect();
        let a = toy_embed(&GrayImage::new(24, 18, px).unwrap()).unwrap();
        let b = toy_embed(&GrayImage::new(24, 18, doubled).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_and_black_images() {
        let small = GrayImage::constant(15, 16, 0.5).unwrap();
        assert!(matches!(toy_embed(&small), Err(EmbedError::TooSmall { .. })));
        let black = GrayImage::constant(16, 16, 0.0).unwrap();
        assert_eq!(toy_embed(&black), Err(EmbedError::Black));
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(matches!(
            GrayImage::new(1, 2, vec![0.0, 1.5]),
            Err(EmbedError::Intensity { index: 1, .. })
        ));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(EmbedError::BufferSize { .. })
        ));
    }

    #[test]
    fn embed_trace_rejects_empty_input() {
        let meta = TraceMeta::reference("r", "s", "t", 0);
        assert_eq!(embed_trace(&[], &ToyEmbedder, meta), Err(EmbedError::NoImages));
    }

    fn image_strategy() -> impl Strategy<Value = GrayImage> {
        (16usize..40, 16usize..40).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..=1.0, w * h)
                .prop_filter("not black", |px| px.iter().any(|&v| v > 0.0))
                .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn toy_embedding_has_unit_norm(img in image_strategy()) {
            let e = toy_embed(&img).unwrap();
            prop_assert!((e.norm() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(toy_embed(&img).unwrap(), e);
        }

        #[test]
        fn embed_trace_preserves_order(imgs in proptest::collection::vec(image_strategy(), 1..5)) {
            let meta = TraceMeta::reference("r", "s", "t", 0);
            let trace = embed_trace(&imgs, &ToyEmbedder, meta).unwrap();
            prop_assert_eq!(trace.len(), imgs.len());
            for (frame, img) in trace.frames().iter().zip(&imgs) {
                prop_assert_eq!(frame, &toy_embed(img).unwrap());
            }
        }
    }
}
