//! Ear anchor search, component layout and the unblended composites.
//!
//! The layout offsets (-5, -2, +5, +10) are calibrated for 92x112 face
//! cuttings. Other canvas sizes are accepted but the constants are not
//! rescaled.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ComponentKind;
use crate::image::{BinaryMask, GrayImage};

/// Column shift applied to the ear corner before any placement.
pub const EAR_COLUMN_SHIFT: i64 = 10;
pub const EYEBROW_ROW_OFFSET: i64 = -5;
pub const NOSE_ROW_OFFSET: i64 = -2;
pub const LEFT_EYEBROW_COLUMN_OFFSET: i64 = -5;
pub const LIP_GAP_BELOW_NOSE: i64 = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssembleError {
    #[error("binary face image has no white pixel to anchor on")]
    NoForeground,
    #[error("{kind} lands at ({row}, {col}); the face cutting is too close to the border")]
    NegativeCoordinate {
        kind: ComponentKind,
        row: i64,
        col: i64,
    },
    #[error("missing dimensions for {0}")]
    MissingDimensions(ComponentKind),
    #[error("{kind} rectangle {height}x{width} at ({row}, {col}) exceeds the {canvas_h}x{canvas_w} canvas")]
    OutOfBounds {
        kind: ComponentKind,
        row: i64,
        col: i64,
        height: usize,
        width: usize,
        canvas_h: usize,
        canvas_w: usize,
    },
    #[error("mask is {mask_w}x{mask_h} but component is {comp_w}x{comp_h}")]
    DimensionMismatch {
        comp_w: usize,
        comp_h: usize,
        mask_w: usize,
        mask_h: usize,
    },
}

/// Upper-left corner of the right ear, `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub kind: ComponentKind,
    pub top_row: usize,
    pub left_col: usize,
    pub height: usize,
    pub width: usize,
}

impl Placement {
    /// Moves the placement by a signed offset, failing when it would leave
    /// a `canvas_h x canvas_w` canvas.
    pub fn shifted(
        &self,
        d_row: i64,
        d_col: i64,
        canvas_h: usize,
        canvas_w: usize,
    ) -> Result<Placement, AssembleError> {
        let row = self.top_row as i64 + d_row;
        let col = self.left_col as i64 + d_col;
        let out_of_bounds = || AssembleError::OutOfBounds {
            kind: self.kind,
            row,
            col,
            height: self.height,
            width: self.width,
            canvas_h,
            canvas_w,
        };
        if row < 0 || col < 0 {
            return Err(out_of_bounds());
        }
        let p = Placement {
            top_row: row as usize,
            left_col: col as usize,
            ..*self
        };
        p.check_inside(canvas_h, canvas_w)?;
        Ok(p)
    }

    pub fn check_inside(&self, canvas_h: usize, canvas_w: usize) -> Result<(), AssembleError> {
        if self.top_row + self.height > canvas_h || self.left_col + self.width > canvas_w {
            return Err(AssembleError::OutOfBounds {
                kind: self.kind,
                row: self.top_row as i64,
                col: self.left_col as i64,
                height: self.height,
                width: self.width,
                canvas_h,
                canvas_w,
            });
        }
        Ok(())
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top_row..self.top_row + self.height).contains(&row)
            && (self.left_col..self.left_col + self.width).contains(&col)
    }
}

/// Component rectangle size, `(height, width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDims {
    pub height: usize,
    pub width: usize,
}

impl ComponentDims {
    pub fn of(img: &GrayImage) -> Self {
        Self {
            height: img.height(),
            width: img.width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    /// Anchor with the ear column shift already applied.
    pub anchor: AnchorPoint,
    pub placements: BTreeMap<ComponentKind, Placement>,
}

impl Layout {
    pub fn get(&self, kind: ComponentKind) -> Option<&Placement> {
        self.placements.get(&kind)
    }
}

impl fmt::Display for Layout {
    /// `kind: top_row,left_col` per line, anchor first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "anchor: {},{}", self.anchor.row, self.anchor.col)?;
        for kind in ComponentKind::COMPOSITE_ORDER {
            if let Some(p) = self.placements.get(&kind) {
                writeln!(f, "{}: {},{}", kind, p.top_row, p.left_col)?;
            }
        }
        Ok(())
    }
}

/// First white pixel scanning columns left to right and, within a column,
/// rows top to bottom.
pub fn find_ear_position(mask: &BinaryMask) -> Result<AnchorPoint, AssembleError> {
    for col in 0..mask.width() {
        for row in 0..mask.height() {
            if mask.get(row, col) == 1 {
                return Ok(AnchorPoint { row, col });
            }
        }
    }
    Err(AssembleError::NoForeground)
}

/// Places the six facial components relative to the ear anchor.
///
/// With `tx = anchor.row` and `ty = anchor.col + 10`:
///
/// | component     | row                    | column                          |
/// |---------------|------------------------|---------------------------------|
/// | right eyebrow | tx - 5                 | ty                              |
/// | right eye     | tx                     | ty + w(reb) - w(reye)           |
/// | nose          | tx - 2                 | ty + w(reb)                     |
/// | left eyebrow  | tx - 5                 | col(nose) + w(nose) - 5         |
/// | left eye      | tx                     | col(leb)                        |
/// | lip           | row(nose) + h(nose) + 5| col(nose) + w(nose)/2 - w(lip)/2|
///
/// Halves are floored.
pub fn compute_layout(
    anchor: AnchorPoint,
    dims: &BTreeMap<ComponentKind, ComponentDims>,
) -> Result<Layout, AssembleError> {
    let dim = |k: ComponentKind| {
        dims.get(&k)
            .copied()
            .ok_or(AssembleError::MissingDimensions(k))
    };
    let reb = dim(ComponentKind::RightEyebrow)?;
    let reye = dim(ComponentKind::RightEye)?;
    let leb = dim(ComponentKind::LeftEyebrow)?;
    let leye = dim(ComponentKind::LeftEye)?;
    let nose = dim(ComponentKind::Nose)?;
    let lip = dim(ComponentKind::Lip)?;

    let tx = anchor.row as i64;
    let ty = anchor.col as i64 + EAR_COLUMN_SHIFT;
    let w = |d: ComponentDims| d.width as i64;

    let nose_pos = (tx + NOSE_ROW_OFFSET, ty + w(reb));
    let leb_pos = (
        tx + EYEBROW_ROW_OFFSET,
        nose_pos.1 + w(nose) + LEFT_EYEBROW_COLUMN_OFFSET,
    );
    let positions = [
        (
            ComponentKind::RightEyebrow,
            reb,
            (tx + EYEBROW_ROW_OFFSET, ty),
        ),
        (ComponentKind::RightEye, reye, (tx, ty + w(reb) - w(reye))),
        (ComponentKind::Nose, nose, nose_pos),
        (ComponentKind::LeftEyebrow, leb, leb_pos),
        (ComponentKind::LeftEye, leye, (tx, leb_pos.1)),
        (
            ComponentKind::Lip,
            lip,
            (
                nose_pos.0 + nose.height as i64 + LIP_GAP_BELOW_NOSE,
                nose_pos.1 + w(nose).div_euclid(2) - w(lip).div_euclid(2),
            ),
        ),
    ];

    let mut placements = BTreeMap::new();
    for (kind, d, (row, col)) in positions {
        if row < 0 || col < 0 {
            return Err(AssembleError::NegativeCoordinate { kind, row, col });
        }
        placements.insert(
            kind,
            Placement {
                kind,
                top_row: row as usize,
                left_col: col as usize,
                height: d.height,
                width: d.width,
            },
        );
    }
    Ok(Layout {
        anchor: AnchorPoint {
            row: anchor.row,
            col: ty as usize,
        },
        placements,
    })
}

fn check_placement(face: &GrayImage, comp: &GrayImage, p: &Placement) -> Result<(), AssembleError> {
    let p = Placement {
        height: comp.height(),
        width: comp.width(),
        ..*p
    };
    p.check_inside(face.height(), face.width())
}

/// Copies the whole component rectangle over the face.
pub fn overlay_blind(
    face: &GrayImage,
    comp: &GrayImage,
    p: &Placement,
) -> Result<GrayImage, AssembleError> {
    check_placement(face, comp, p)?;
    let mut out = face.clone();
    for i in 0..comp.height() {
        for j in 0..comp.width() {
            out.set(i + p.top_row, j + p.left_col, comp.get(i, j));
        }
    }
    Ok(out)
}

/// Copies only the component pixels whose mask bit is 0.
pub fn overlay_masked(
    face: &GrayImage,
    comp: &GrayImage,
    mask: &BinaryMask,
    p: &Placement,
) -> Result<GrayImage, AssembleError> {
    let mut out = face.clone();
    paste_masked(&mut out, comp, mask, p)?;
    Ok(out)
}

fn paste_masked(
    canvas: &mut GrayImage,
    comp: &GrayImage,
    mask: &BinaryMask,
    p: &Placement,
) -> Result<(), AssembleError> {
    if !comp.same_dims(mask) {
        return Err(AssembleError::DimensionMismatch {
            comp_w: comp.width(),
            comp_h: comp.height(),
            mask_w: mask.width(),
            mask_h: mask.height(),
        });
    }
    check_placement(canvas, comp, p)?;
    for i in 0..comp.height() {
        for j in 0..comp.width() {
            if mask.is_foreground(i, j) {
                canvas.set(i + p.top_row, j + p.left_col, comp.get(i, j));
            }
        }
    }
    Ok(())
}

/// Black canvas holding only the masked component regions; later entries
/// overwrite earlier ones.
pub fn build_component_sheet(
    canvas_h: usize,
    canvas_w: usize,
    placed: &[(&GrayImage, &BinaryMask, Placement)],
) -> Result<GrayImage, AssembleError> {
    let mut sheet = GrayImage::filled(canvas_w, canvas_h, 0);
    for (comp, mask, p) in placed {
        paste_masked(&mut sheet, comp, mask, p)?;
    }
    Ok(sheet)
}
