//! PGM (P2/P5) decoding and canonical P5 encoding.

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("PGM raster truncated: expected {expected} samples, found {found}")]
    TruncatedRaster { expected: usize, found: usize },
    #[error("unsupported PGM maxval {0} (only 1..=255)")]
    UnsupportedMaxval(u32),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decodes a P2 or P5 PGM. Samples are taken verbatim; the maxval only
/// bounds them.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let encoding = match bytes.get(..2) {
        Some(b"P2") => Encoding::Ascii,
        Some(b"P5") => Encoding::Binary,
        _ => return Err(PgmError::MalformedHeader("magic is not P2 or P5".into())),
    };
    let mut cur = Cursor {
        data: bytes,
        pos: 2,
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| PgmError::MalformedHeader("dimensions overflow".into()))?;

    let pixels = match encoding {
        Encoding::Binary => {
            // exactly one whitespace byte separates maxval from the raster
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => {
                    return Err(PgmError::MalformedHeader(
                        "missing whitespace after maxval".into(),
                    ))
                }
            }
            let raster = &bytes[cur.pos..];
            if raster.len() < expected {
                return Err(PgmError::TruncatedRaster {
                    expected,
                    found: raster.len(),
                });
            }
            raster[..expected].to_vec()
        }
        Encoding::Ascii => {
            let mut pixels = Vec::with_capacity(expected);
            while pixels.len() < expected {
                cur.skip_whitespace_and_comments();
                if cur.pos >= bytes.len() {
                    return Err(PgmError::TruncatedRaster {
                        expected,
                        found: pixels.len(),
                    });
                }
                let v = cur.number("sample")?;
                if v > maxval {
                    return Err(PgmError::MalformedHeader(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )));
                }
                pixels.push(v as u8);
            }
            pixels
        }
    };
    if encoding == Encoding::Binary {
        if let Some(&v) = pixels.iter().find(|&&v| u32::from(v) > maxval) {
            return Err(PgmError::MalformedHeader(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
    }
    Ok(GrayImage::new(width, height, pixels).expect("dimensions checked above"))
}

/// Canonical P5: `"P5\n<w> <h>\n255\n"` followed by the raw raster.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_example() {
        let img = load_pgm(b"P2\n2 2\n255\n0 255\n10 20\n").unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 255, 10, 20]);
    }

    #[test]
    fn ascii_with_comments() {
        let img = load_pgm(b"P2\n# made by hand\n3 1 # trailing\n9\n1 2\n# mid\n9").unwrap();
        assert_eq!(img.pixels(), &[1, 2, 9]);
    }

    #[test]
    fn sixteen_bit_rejected() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0]);
        assert_eq!(load_pgm(&bytes), Err(PgmError::UnsupportedMaxval(65535)));
    }

    #[test]
    fn truncated_binary() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(
            load_pgm(&bytes),
            Err(PgmError::TruncatedRaster {
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn truncated_ascii() {
        assert!(matches!(
            load_pgm(b"P2 2 2 255 1 2 3"),
            Err(PgmError::TruncatedRaster {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn bad_magic_and_header() {
        assert!(matches!(
            load_pgm(b"P6\n1 1\n255\n\0\0\0"),
            Err(PgmError::MalformedHeader(_))
        ));
        assert!(matches!(
            load_pgm(b"P5\nx 1\n255\n\0"),
            Err(PgmError::MalformedHeader(_))
        ));
        assert!(matches!(load_pgm(b"P5"), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(
            load_pgm(b"P5\n0 1\n255\n"),
            Err(PgmError::MalformedHeader(_))
        ));
    }

    #[test]
    fn save_one_pixel() {
        let img = GrayImage::new(1, 1, vec![42]).unwrap();
        assert_eq!(save_pgm(&img), b"P5\n1 1\n255\n\x2a");
    }

    #[test]
    fn save_raster_bytes() {
        let img = GrayImage::new(2, 2, vec![0, 255, 10, 20]).unwrap();
        let bytes = save_pgm(&img);
        assert_eq!(&bytes[bytes.len() - 4..], &[0x00, 0xFF, 0x0A, 0x14]);
    }

    #[test]
    fn canonical_p5_is_byte_identical() {
        let img = GrayImage::from_fn(7, 5, |r, c| (r * 31 + c * 7) as u8);
        let bytes = save_pgm(&img);
        assert_eq!(save_pgm(&load_pgm(&bytes).unwrap()), bytes);
    }
}
