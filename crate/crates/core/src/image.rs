//! Grayscale rasters, binary masks and the pixel-level operations shared by
//! every stage of the pipeline.
//!
//! Indexing is 0-based `(row, col)` throughout; `row` runs over the image
//! height and `col` over its width.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("raster holds {actual} values but {width}x{height} needs {expected}")]
    RasterLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("image has a single intensity; no threshold separates two classes")]
    DegenerateImage,
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::RasterLength {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with one intensity.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    pub fn same_dims<T: Dimensions>(&self, other: &T) -> bool {
        self.width == other.width() && self.height == other.height()
    }
}

/// Anything with a width and a height.
pub trait Dimensions {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
}

impl Dimensions for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

impl Dimensions for BinaryMask {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

/// Row-major 0/1 mask. `1` is white (background), `0` is black (the
/// component region that gets copied).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("zeros", &self.count_zeros())
            .finish()
    }
}

impl BinaryMask {
    /// Any nonzero entry of `bits` is stored as 1.
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if bits.len() != expected {
            return Err(ImageError::RasterLength {
                width,
                height,
                expected,
                actual: bits.len(),
            });
        }
        let bits = bits.into_iter().map(|b| u8::from(b != 0)).collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, bit: bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be nonzero");
        Self {
            width,
            height,
            bits: vec![u8::from(bit); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be nonzero");
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(u8::from(f(r, c)));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn is_foreground(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == 0
    }

    pub fn count_zeros(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }

    /// Renders the mask as an image, 0 -> 0 and 1 -> 255.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .bits
                .iter()
                .map(|&b| if b == 0 { 0 } else { 255 })
                .collect(),
        }
    }

    /// Inverse of [`BinaryMask::to_image`]: zero pixels map to 0, all others to 1.
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            bits: img.pixels.iter().map(|&p| u8::from(p != 0)).collect(),
        }
    }
}

/// An intensity cut-off.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Threshold(pub u8);

impl Threshold {
    pub fn value(self) -> u8 {
        self.0
    }
}

/// `1` where `pixel >= t`, `0` elsewhere.
pub fn binarize(img: &GrayImage, t: Threshold) -> BinaryMask {
    BinaryMask {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&p| u8::from(p >= t.0)).collect(),
    }
}

/// Otsu's threshold over the 256-bin histogram.
///
/// The returned `t` splits the pixels into `< t` and `>= t` (the same split
/// [`binarize`] uses). Among thresholds with equal between-class variance the
/// smallest wins.
pub fn otsu_threshold(img: &GrayImage) -> Result<Threshold, ImageError> {
    let mut hist = [0u64; 256];
    for &p in &img.pixels {
        hist[p as usize] += 1;
    }
    if hist.iter().filter(|&&h| h > 0).count() < 2 {
        return Err(ImageError::DegenerateImage);
    }

    let total = img.pixels.len() as u64;
    let sum_total: u64 = hist.iter().enumerate().map(|(i, &h)| i as u64 * h).sum();

    // Integer arithmetic keeps ties exact: the between-class variance
    // scaled by total^2 is (sum_total*w_lo - sum_lo*total)^2 / (w_lo*w_hi).
    let mut best_t = 0u8;
    let mut best: Option<(u128, u128)> = None;
    let mut w_lo = 0u64;
    let mut sum_lo = 0u64;
    for t in 1..256usize {
        w_lo += hist[t - 1];
        sum_lo += (t as u64 - 1) * hist[t - 1];
        let w_hi = total - w_lo;
        if w_lo == 0 || w_hi == 0 {
            continue;
        }
        let diff =
            (sum_total as i128 * w_lo as i128 - sum_lo as i128 * total as i128).unsigned_abs();
        let num = diff * diff;
        let den = w_lo as u128 * w_hi as u128;
        let better = match best {
            None => true,
            // num/den > best_num/best_den
            Some((bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((num, den));
            best_t = t as u8;
        }
    }
    Ok(Threshold(best_t))
}

/// Nearest-neighbour resize: `out(r, c) = in(floor(r*h_in/h), floor(c*w_in/w))`.
///
/// Panics if `width` or `height` is zero.
pub fn resize_nearest(img: &GrayImage, width: usize, height: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |r, c| {
        img.get(r * img.height / height, c * img.width / width)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_boundary_is_inclusive() {
        let img = GrayImage::new(2, 1, vec![127, 128]).unwrap();
        let m = binarize(&img, Threshold(128));
        assert_eq!(m.bits(), &[0, 1]);
    }

    #[test]
    fn binarize_all_zero() {
        let img = GrayImage::filled(4, 3, 0);
        for t in 1..=255u8 {
            assert_eq!(binarize(&img, Threshold(t)).count_zeros(), 12);
        }
    }

    #[test]
    fn otsu_rejects_constant() {
        assert_eq!(
            otsu_threshold(&GrayImage::filled(5, 5, 77)),
            Err(ImageError::DegenerateImage)
        );
    }

    #[test]
    fn otsu_splits_two_levels() {
        let img = GrayImage::from_fn(8, 8, |r, _| if r < 4 { 0 } else { 255 });
        let t = otsu_threshold(&img).unwrap();
        assert!(t.0 >= 1);
        let m = binarize(&img, t);
        assert_eq!(m.count_zeros(), 32);
        for c in 0..8 {
            assert_eq!(m.get(0, c), 0);
            assert_eq!(m.get(7, c), 1);
        }
    }

    #[test]
    fn resize_checkerboard_takes_block_corners() {
        // 2x2 blocks: block (br, bc) has top-left value 10*(2*br+bc)+1, others 0.
        let img = GrayImage::from_fn(4, 4, |r, c| {
            if r % 2 == 0 && c % 2 == 0 {
                (10 * (2 * (r / 2) + c / 2) + 1) as u8
            } else {
                0
            }
        });
        let out = resize_nearest(&img, 2, 2);
        assert_eq!(out.pixels(), &[1, 11, 21, 31]);
    }

    #[test]
    fn resize_to_quarter_dims() {
        let img = GrayImage::filled(92, 112, 9);
        let out = resize_nearest(&img, 23, 28);
        assert_eq!((out.width(), out.height()), (23, 28));
    }

    #[test]
    fn rejects_bad_raster() {
        assert!(matches!(
            GrayImage::new(3, 3, vec![0; 8]),
            Err(ImageError::RasterLength {
                expected: 9,
                actual: 8,
                ..
            })
        ));
        assert!(matches!(
            GrayImage::new(0, 3, vec![]),
            Err(ImageError::EmptyDimensions { .. })
        ));
    }

    #[test]
    fn mask_image_round_trip() {
        let m = BinaryMask::from_fn(5, 4, |r, c| (r + c) % 3 == 0);
        assert_eq!(BinaryMask::from_image(&m.to_image()), m);
    }
}
