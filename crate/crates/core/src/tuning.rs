//! Seam blending with the 3x3 neighbourhood intensity factor.
//!
//! For a face pixel `F` receiving a component pixel `C`, with `FI` and `CI`
//! the 3x3 sums around them:
//!
//! ```text
//! IF  = FI / CI
//! out = (F + 2 * IF * C) / (1 + 2 * IF)
//! ```
//!
//! This module is the floating-point reference. [`tune_masked`] updates the
//! face in place while scanning the component; [`tune_overlay`] reads from two
//! immutable inputs and writes a third buffer. Only pixels whose full 3x3
//! window lies inside the image(s) are blended.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::{AssembleError, Placement};
use crate::image::{BinaryMask, GrayImage, Threshold};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TuneError {
    #[error("3x3 window centred at ({row}, {col}) leaves the {height}x{width} image")]
    WindowOutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("images differ in size: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error(transparent)]
    Placement(#[from] AssembleError),
    #[error("seam boundary is empty")]
    EmptyBoundary,
}

/// What to do when the component window sums to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ZeroCiPolicy {
    CopyComponent,
    #[default]
    LeaveFace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TuneConfig {
    /// Sheet pixels strictly above this are treated as component pixels.
    pub component_threshold: Threshold,
    pub zero_ci_policy: ZeroCiPolicy,
}

impl TuneConfig {
    pub fn with_threshold(t: u8) -> Self {
        Self {
            component_threshold: Threshold(t),
            ..Self::default()
        }
    }
}

/// Intermediate values of one blend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendTerms {
    pub fi: f64,
    pub ci: f64,
    /// `None` when `ci == 0`.
    pub intensity_factor: Option<f64>,
    pub out: f64,
}

#[inline]
fn has_full_window(height: usize, width: usize, row: usize, col: usize) -> bool {
    row >= 1 && col >= 1 && row + 1 < height && col + 1 < width
}

#[inline]
fn window_sum(img: &GrayImage, row: usize, col: usize) -> u32 {
    let mut s = 0u32;
    for r in row - 1..=row + 1 {
        for &p in &img.row(r)[col - 1..=col + 1] {
            s += u32::from(p);
        }
    }
    s
}

/// Sum of the nine intensities centred at `(row, col)`.
pub fn neighborhood_sum(img: &GrayImage, row: usize, col: usize) -> Result<u32, TuneError> {
    if !has_full_window(img.height(), img.width(), row, col) {
        return Err(TuneError::WindowOutOfBounds {
            row,
            col,
            height: img.height(),
            width: img.width(),
        });
    }
    Ok(window_sum(img, row, col))
}

pub fn blend_terms(face: u8, comp: u8, fi: f64, ci: f64, cfg: &TuneConfig) -> BlendTerms {
    if ci == 0.0 {
        let out = match cfg.zero_ci_policy {
            ZeroCiPolicy::CopyComponent => f64::from(comp),
            ZeroCiPolicy::LeaveFace => f64::from(face),
        };
        return BlendTerms {
            fi,
            ci,
            intensity_factor: None,
            out,
        };
    }
    let k = fi / ci;
    // (F + 2kC) / (1 + 2k) multiplied through by CI: one correctly rounded
    // division of exact integers, so x.5 values stay exact for `commit`.
    let out = (f64::from(face) * ci + 2.0 * fi * f64::from(comp)) / (ci + 2.0 * fi);
    BlendTerms {
        fi,
        ci,
        intensity_factor: Some(k),
        out,
    }
}

/// Unrounded blended intensity.
pub fn blend_pixel(face: u8, comp: u8, fi: f64, ci: f64, cfg: &TuneConfig) -> f64 {
    blend_terms(face, comp, fi, ci, cfg).out
}

/// Round half up, then clamp to the 8-bit range.
pub fn commit(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Blends a component into the face in place, raster-scanning the
/// component. Face sums see pixels already rewritten earlier in the scan.
/// Foreground pixels whose window leaves either image are copied as is.
pub fn tune_masked(
    face: &GrayImage,
    comp: &GrayImage,
    mask: &BinaryMask,
    p: &Placement,
    cfg: &TuneConfig,
) -> Result<GrayImage, TuneError> {
    if !comp.same_dims(mask) {
        return Err(AssembleError::DimensionMismatch {
            comp_w: comp.width(),
            comp_h: comp.height(),
            mask_w: mask.width(),
            mask_h: mask.height(),
        }
        .into());
    }
    Placement {
        height: comp.height(),
        width: comp.width(),
        ..*p
    }
    .check_inside(face.height(), face.width())?;

    let mut out = face.clone();
    for i in 0..comp.height() {
        for j in 0..comp.width() {
            if !mask.is_foreground(i, j) {
                continue;
            }
            let (x, y) = (i + p.top_row, j + p.left_col);
            let c = comp.get(i, j);
            if has_full_window(comp.height(), comp.width(), i, j)
                && has_full_window(out.height(), out.width(), x, y)
            {
                let fi = f64::from(window_sum(&out, x, y));
                let ci = f64::from(window_sum(comp, i, j));
                out.set(x, y, commit(blend_pixel(out.get(x, y), c, fi, ci, cfg)));
            } else {
                out.set(x, y, c);
            }
        }
    }
    Ok(out)
}

pub(crate) fn check_same_dims(a: &GrayImage, b: &GrayImage) -> Result<(), TuneError> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(TuneError::DimensionMismatch {
            a_w: a.width(),
            a_h: a.height(),
            b_w: b.width(),
            b_h: b.height(),
        })
    }
}

/// Double-buffered blend of a component sheet into a blank face: every sum
/// reads the untouched inputs, so the visit order does not matter.
pub fn tune_overlay(
    blank: &GrayImage,
    sheet: &GrayImage,
    cfg: &TuneConfig,
) -> Result<GrayImage, TuneError> {
    check_same_dims(blank, sheet)?;
    let (h, w) = (blank.height(), blank.width());
    let mut out = blank.clone();
    for x in 1..h.saturating_sub(1) {
        for y in 1..w.saturating_sub(1) {
            let c = sheet.get(x, y);
            if c <= cfg.component_threshold.0 {
                continue;
            }
            let fi = f64::from(window_sum(blank, x, y));
            let ci = f64::from(window_sum(sheet, x, y));
            out.set(x, y, commit(blend_pixel(blank.get(x, y), c, fi, ci, cfg)));
        }
    }
    Ok(out)
}

/// A pair of pixel coordinates `((row, col), (row, col))`.
pub type PixelPair = ((usize, usize), (usize, usize));

/// Mean absolute intensity difference over the given pixel pairs.
pub fn seam_contrast(img: &GrayImage, boundary: &[PixelPair]) -> Result<f64, TuneError> {
    if boundary.is_empty() {
        return Err(TuneError::EmptyBoundary);
    }
    let total: f64 = boundary
        .iter()
        .map(|&((r0, c0), (r1, c1))| {
            (f64::from(img.get(r0, c0)) - f64::from(img.get(r1, c1))).abs()
        })
        .sum();
    Ok(total / boundary.len() as f64)
}

/// 4-connected pairs `(inside, outside)` across the edge of a placed mask,
/// in canvas coordinates. `inside` is a foreground (mask 0) pixel; `outside`
/// is a neighbour that is background or beyond the component rectangle,
/// restricted to the canvas.
pub fn mask_boundary_pairs(
    mask: &BinaryMask,
    p: &Placement,
    canvas_h: usize,
    canvas_w: usize,
) -> Vec<PixelPair> {
    let mut pairs = Vec::new();
    let (mh, mw) = (mask.height() as i64, mask.width() as i64);
    for i in 0..mask.height() {
        for j in 0..mask.width() {
            if !mask.is_foreground(i, j) {
                continue;
            }
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                let inside_rect = (0..mh).contains(&ni) && (0..mw).contains(&nj);
                if inside_rect && mask.is_foreground(ni as usize, nj as usize) {
                    continue;
                }
                let (r, c) = (p.top_row as i64 + ni, p.left_col as i64 + nj);
                if r < 0 || c < 0 || r >= canvas_h as i64 || c >= canvas_w as i64 {
                    continue;
                }
                pairs.push(((i + p.top_row, j + p.left_col), (r as usize, c as usize)));
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ComponentKind;

    #[test]
    fn sums() {
        let ones = GrayImage::filled(3, 3, 1);
        assert_eq!(neighborhood_sum(&ones, 1, 1), Ok(9));
        let center = GrayImage::from_fn(3, 3, |r, c| if (r, c) == (1, 1) { 9 } else { 0 });
        assert_eq!(neighborhood_sum(&center, 1, 1), Ok(9));
        assert!(matches!(
            neighborhood_sum(&ones, 0, 1),
            Err(TuneError::WindowOutOfBounds { .. })
        ));
        assert!(neighborhood_sum(&ones, 1, 2).is_err());
    }

    #[test]
    fn blend_examples() {
        let cfg = TuneConfig::default();
        for (fi, ci) in [(1.0, 1.0), (900.0, 9.0), (9.0, 2295.0)] {
            assert_eq!(blend_pixel(100, 100, fi, ci, &cfg), 100.0);
        }
        let t = blend_terms(90, 180, 810.0, 1620.0, &cfg);
        assert_eq!(t.intensity_factor, Some(0.5));
        assert_eq!(t.out, 135.0);
        assert_eq!(blend_pixel(90, 180, 810.0, 0.0, &cfg), 90.0);
        let copy = TuneConfig {
            zero_ci_policy: ZeroCiPolicy::CopyComponent,
            ..cfg
        };
        assert_eq!(blend_pixel(90, 180, 810.0, 0.0, &copy), 180.0);
    }

    #[test]
    fn commit_rounds_half_up() {
        assert_eq!(commit(134.5), 135);
        assert_eq!(commit(134.4999), 134);
        assert_eq!(commit(-3.0), 0);
        assert_eq!(commit(300.0), 255);
    }

    fn placement(comp: &GrayImage, row: usize, col: usize) -> Placement {
        Placement {
            kind: ComponentKind::LeftEye,
            top_row: row,
            left_col: col,
            height: comp.height(),
            width: comp.width(),
        }
    }

    #[test]
    fn masked_identity_cases() {
        let face = GrayImage::from_fn(10, 9, |r, c| (20 + r * 13 + c * 7) as u8);
        let p = Placement {
            kind: ComponentKind::Nose,
            top_row: 2,
            left_col: 3,
            height: 5,
            width: 4,
        };
        let comp = GrayImage::from_fn(4, 5, |i, j| face.get(i + 2, j + 3));
        let zeros = BinaryMask::filled(4, 5, false);
        let cfg = TuneConfig::default();
        assert_eq!(tune_masked(&face, &comp, &zeros, &p, &cfg).unwrap(), face);
        let other = GrayImage::filled(4, 5, 250);
        let ones = BinaryMask::filled(4, 5, true);
        assert_eq!(tune_masked(&face, &other, &ones, &p, &cfg).unwrap(), face);
    }

    #[test]
    fn masked_edge_pixels_copied() {
        let face = GrayImage::filled(6, 6, 50);
        let comp = GrayImage::filled(3, 3, 200);
        let mask = BinaryMask::filled(3, 3, false);
        let out = tune_masked(
            &face,
            &comp,
            &mask,
            &placement(&comp, 1, 1),
            &TuneConfig::default(),
        )
        .unwrap();
        // only the component centre has a full window in the component
        for (r, c) in [
            (1, 1),
            (1, 2),
            (1, 3),
            (2, 1),
            (2, 3),
            (3, 1),
            (3, 2),
            (3, 3),
        ] {
            assert_eq!(out.get(r, c), 200, "({r},{c})");
        }
        // centre: rows above and the pixel to the left are already 200
        let expected = commit(blend_pixel(50, 200, 1050.0, 1800.0, &TuneConfig::default()));
        assert_eq!(out.get(2, 2), expected);
        assert_eq!(out.get(0, 0), 50);
    }

    #[test]
    fn overlay_zero_sheet_and_fixed_point() {
        let blank = GrayImage::from_fn(7, 6, |r, c| (30 + r * 9 + c * 5) as u8);
        let cfg = TuneConfig::default();
        assert_eq!(
            tune_overlay(&blank, &GrayImage::filled(7, 6, 0), &cfg).unwrap(),
            blank
        );
        assert_eq!(tune_overlay(&blank, &blank, &cfg).unwrap(), blank);
        assert!(matches!(
            tune_overlay(&blank, &GrayImage::filled(6, 6, 0), &cfg),
            Err(TuneError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn seam_examples() {
        let flat = GrayImage::filled(4, 4, 80);
        assert_eq!(
            seam_contrast(&flat, &[((0, 0), (0, 1)), ((1, 1), (2, 1))]),
            Ok(0.0)
        );
        let img = GrayImage::new(2, 1, vec![10, 30]).unwrap();
        assert_eq!(seam_contrast(&img, &[((0, 0), (0, 1))]), Ok(20.0));
        assert_eq!(seam_contrast(&img, &[]), Err(TuneError::EmptyBoundary));
    }

    #[test]
    fn boundary_of_single_pixel_mask() {
        let mask = BinaryMask::from_fn(3, 3, |r, c| (r, c) != (1, 1));
        let p = Placement {
            kind: ComponentKind::Lip,
            top_row: 5,
            left_col: 5,
            height: 3,
            width: 3,
        };
        let mut pairs = mask_boundary_pairs(&mask, &p, 20, 20);
        pairs.sort();
        assert_eq!(
            pairs,
            vec![
                ((6, 6), (5, 6)),
                ((6, 6), (6, 5)),
                ((6, 6), (6, 7)),
                ((6, 6), (7, 6))
            ]
        );
        // a full mask at the canvas corner only has edges facing inward
        let full = BinaryMask::filled(2, 2, false);
        let corner = Placement {
            top_row: 0,
            left_col: 0,
            height: 2,
            width: 2,
            ..p
        };
        assert_eq!(mask_boundary_pairs(&full, &corner, 2, 2), vec![]);
        assert_eq!(mask_boundary_pairs(&full, &corner, 3, 3).len(), 4);
    }
}
