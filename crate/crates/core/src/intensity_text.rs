//! Headerless intensity text files: one base-10 value per line, row-major.
//! Dimensions travel out of band.

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntensityTextError {
    #[error("expected {expected} intensity values for {width}x{height}, found {found}")]
    CountMismatch {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },
    #[error("value {value} at position {index} is outside 0..=255")]
    ValueOutOfRange { index: usize, value: i64 },
    #[error("token {token:?} at position {index} is not an integer")]
    NotAnInteger { index: usize, token: String },
    #[error("dimensions must be nonzero, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
}

pub fn write_intensity_text(img: &GrayImage) -> String {
    let mut out = String::with_capacity(img.pixels().len() * 4);
    for &p in img.pixels() {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

/// Parses `width * height` whitespace-separated integers into a row-major image.
pub fn read_intensity_text(
    text: &str,
    width: usize,
    height: usize,
) -> Result<GrayImage, IntensityTextError> {
    if width == 0 || height == 0 {
        return Err(IntensityTextError::ZeroDimension { width, height });
    }
    let expected = width * height;
    let mut pixels = Vec::with_capacity(expected);
    for (index, token) in text.split_ascii_whitespace().enumerate() {
        let value: i64 = token
            .parse()
            .map_err(|_| IntensityTextError::NotAnInteger {
                index,
                token: token.to_string(),
            })?;
        if !(0..=255).contains(&value) {
            return Err(IntensityTextError::ValueOutOfRange { index, value });
        }
        pixels.push(value as u8);
    }
    if pixels.len() != expected {
        return Err(IntensityTextError::CountMismatch {
            width,
            height,
            expected,
            found: pixels.len(),
        });
    }
    Ok(GrayImage::new(width, height, pixels).expect("length checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_value_per_line() {
        let img = GrayImage::new(2, 2, vec![0, 255, 10, 20]).unwrap();
        assert_eq!(write_intensity_text(&img), "0\n255\n10\n20\n");
        let one = GrayImage::new(1, 1, vec![7]).unwrap();
        assert_eq!(write_intensity_text(&one), "7\n");
    }

    #[test]
    fn reads_example() {
        let img = read_intensity_text("0\n255\n10\n20\n", 2, 2).unwrap();
        assert_eq!(img.pixels(), &[0, 255, 10, 20]);
    }

    #[test]
    fn count_mismatch() {
        assert!(matches!(
            read_intensity_text("1\n2\n3\n", 2, 2),
            Err(IntensityTextError::CountMismatch {
                expected: 4,
                found: 3,
                ..
            })
        ));
        assert!(matches!(
            read_intensity_text("1 2 3 4 5", 2, 2),
            Err(IntensityTextError::CountMismatch { found: 5, .. })
        ));
    }

    #[test]
    fn out_of_range_and_garbage() {
        assert_eq!(
            read_intensity_text("1\n300\n3\n4\n", 2, 2),
            Err(IntensityTextError::ValueOutOfRange {
                index: 1,
                value: 300
            })
        );
        assert!(matches!(
            read_intensity_text("1\n-1\n3\n4\n", 2, 2),
            Err(IntensityTextError::ValueOutOfRange { value: -1, .. })
        ));
        assert!(matches!(
            read_intensity_text("1\n2.5\n3\n4\n", 2, 2),
            Err(IntensityTextError::NotAnInteger { index: 1, .. })
        ));
    }
}
