//! Integer-only model of the streaming tuning kernel.
//!
//! The blend is evaluated as a single rational,
//!
//! ```text
//! out = (F*CI + 2*FI*C) / (CI + 2*FI)
//! ```
//!
//! rounded half up with one unsigned divide. Pixels arrive in raster order;
//! the kernel keeps the last three rows of each input in line buffers and
//! emits one output row per input row, delayed by one row.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::image::GrayImage;
use crate::intensity_text::{read_intensity_text, write_intensity_text, IntensityTextError};
use crate::tuning::{check_same_dims, TuneConfig, TuneError, ZeroCiPolicy};

/// Largest 3x3 window sum of 8-bit pixels.
pub const MAX_WINDOW_SUM: u32 = 9 * 255;

// Widest intermediate: 2*(F*CI + 2*FI*C) + (CI + 2*FI) at full scale.
const MAX_ROUNDING_NUMERATOR: u64 = 2
    * (255 * MAX_WINDOW_SUM as u64 + 2 * MAX_WINDOW_SUM as u64 * 255)
    + (MAX_WINDOW_SUM as u64 + 2 * MAX_WINDOW_SUM as u64);
const _: () = assert!(MAX_ROUNDING_NUMERATOR < u32::MAX as u64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatapathError {
    #[error("blend denominator CI + 2*FI is zero")]
    DegenerateDenominator,
    #[error("window sum {0} exceeds {MAX_WINDOW_SUM}")]
    SumOutOfRange(u32),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Text(#[from] IntensityTextError),
}

/// One processed pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub x: usize,
    pub y: usize,
    pub fi: u32,
    pub ci: u32,
    pub num: u32,
    pub den: u32,
    pub out: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatapathTrace {
    pub entries: Vec<TraceEntry>,
}

impl DatapathTrace {
    /// Tab-separated `x y FI CI num den out`, with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("x\ty\tFI\tCI\tnum\tden\tout\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.x, e.y, e.fi, e.ci, e.num, e.den, e.out
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Quotient {
    num: u32,
    den: u32,
    out: u8,
}

fn divide(face: u8, comp: u8, fi: u32, ci: u32) -> Result<Quotient, DatapathError> {
    for s in [fi, ci] {
        if s > MAX_WINDOW_SUM {
            return Err(DatapathError::SumOutOfRange(s));
        }
    }
    let num = u32::from(face) * ci + 2 * fi * u32::from(comp);
    let den = ci + 2 * fi;
    if den == 0 {
        return Err(DatapathError::DegenerateDenominator);
    }
    let q = (2 * num + den) / (2 * den);
    Ok(Quotient {
        num,
        den,
        out: q.min(255) as u8,
    })
}

/// Integer blend, rounded half up.
pub fn blend_pixel_int(face: u8, comp: u8, fi: u32, ci: u32) -> Result<u8, DatapathError> {
    divide(face, comp, fi, ci).map(|q| q.out)
}

/// Three-row line buffer for one input stream.
struct LineBuffer {
    rows: VecDeque<Vec<u8>>,
}

impl LineBuffer {
    fn new() -> Self {
        Self {
            rows: VecDeque::with_capacity(3),
        }
    }

    fn push(&mut self, row: &[u8]) {
        if self.rows.len() == 3 {
            self.rows.pop_front();
        }
        self.rows.push_back(row.to_vec());
    }

    fn is_full(&self) -> bool {
        self.rows.len() == 3
    }

    /// Centre row of the window.
    fn middle(&self) -> &[u8] {
        &self.rows[1]
    }

    fn window_sum(&self, col: usize) -> u32 {
        self.rows
            .iter()
            .map(|r| {
                r[col - 1..=col + 1]
                    .iter()
                    .map(|&p| u32::from(p))
                    .sum::<u32>()
            })
            .sum()
    }
}

struct Kernel<'a> {
    cfg: &'a TuneConfig,
    width: usize,
    blank: LineBuffer,
    sheet: LineBuffer,
    trace: DatapathTrace,
}

impl Kernel<'_> {
    /// Output row for the centre of the current windows.
    #[allow(clippy::needless_range_loop)]
    fn emit_middle(&mut self, x: usize) -> Result<Vec<u8>, DatapathError> {
        let mut out = self.blank.middle().to_vec();
        for y in 1..self.width - 1 {
            let c = self.sheet.middle()[y];
            if c <= self.cfg.component_threshold.0 {
                continue;
            }
            let f = self.blank.middle()[y];
            let fi = self.blank.window_sum(y);
            let ci = self.sheet.window_sum(y);
            if ci == 0 {
                out[y] = match self.cfg.zero_ci_policy {
                    ZeroCiPolicy::LeaveFace => f,
                    ZeroCiPolicy::CopyComponent => c,
                };
                continue;
            }
            let q = divide(f, c, fi, ci)?;
            out[y] = q.out;
            self.trace.entries.push(TraceEntry {
                x,
                y,
                fi,
                ci,
                num: q.num,
                den: q.den,
                out: q.out,
            });
        }
        Ok(out)
    }
}

/// Streams both images through the kernel in one raster pass.
pub fn stream_tune(
    blank: &GrayImage,
    sheet: &GrayImage,
    cfg: &TuneConfig,
) -> Result<(GrayImage, DatapathTrace), DatapathError> {
    check_same_dims(blank, sheet)?;
    let (h, w) = (blank.height(), blank.width());
    let mut kernel = Kernel {
        cfg,
        width: w,
        blank: LineBuffer::new(),
        sheet: LineBuffer::new(),
        trace: DatapathTrace::default(),
    };
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        kernel.blank.push(blank.row(r));
        kernel.sheet.push(sheet.row(r));
        if r == 0 {
            // no row above: passes through
            out.extend_from_slice(blank.row(0));
        } else if kernel.blank.is_full() {
            let row = if w >= 3 {
                kernel.emit_middle(r - 1)?
            } else {
                kernel.blank.middle().to_vec()
            };
            out.extend_from_slice(&row);
        }
    }
    if h >= 2 {
        // no row below: passes through
        out.extend_from_slice(blank.row(h - 1));
    }
    let img = GrayImage::new(w, h, out).expect("one output row per input row");
    Ok((img, kernel.trace))
}

/// Worst-case comparison between the reference and the integer model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub max_abs_diff: u8,
    pub mismatch_count: usize,
    /// Per-pixel `|golden - fixed|`.
    pub diff: GrayImage,
}

pub fn equivalence_report(
    golden: &GrayImage,
    fixed: &GrayImage,
) -> Result<EquivalenceReport, DatapathError> {
    check_same_dims(golden, fixed)?;
    let diffs: Vec<u8> = golden
        .pixels()
        .iter()
        .zip(fixed.pixels())
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    Ok(EquivalenceReport {
        max_abs_diff: diffs.iter().copied().max().unwrap_or(0),
        mismatch_count: diffs.iter().filter(|&&d| d != 0).count(),
        diff: GrayImage::new(golden.width(), golden.height(), diffs).expect("same dims"),
    })
}

/// Reads two headerless intensity files, runs the kernel and renders the
/// result in the same format.
pub fn run_textfile_flow(
    face_text: &str,
    components_text: &str,
    width: usize,
    height: usize,
    cfg: &TuneConfig,
) -> Result<(String, DatapathTrace), DatapathError> {
    let blank = read_intensity_text(face_text, width, height)?;
    let sheet = read_intensity_text(components_text, width, height)?;
    let (out, trace) = stream_tune(&blank, &sheet, cfg)?;
    Ok((write_intensity_text(&out), trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_blend_examples() {
        assert_eq!(blend_pixel_int(90, 180, 810, 1620), Ok(135));
        for (f, fi, ci) in [(0u8, 9, 9), (77, 100, 2000), (255, 2295, 1)] {
            assert_eq!(blend_pixel_int(f, f, fi, ci), Ok(f));
        }
        assert_eq!(blend_pixel_int(42, 250, 0, 500), Ok(42));
        assert_eq!(
            blend_pixel_int(1, 2, 0, 0),
            Err(DatapathError::DegenerateDenominator)
        );
        assert_eq!(
            blend_pixel_int(1, 2, 2296, 1),
            Err(DatapathError::SumOutOfRange(2296))
        );
    }

    #[test]
    fn half_rounds_up() {
        // (1*1 + 2*1*2) / (1 + 2) = 5/3 -> 2 ; (0*2 + 2*1*1)/(2+2) = 0.5 -> 1
        assert_eq!(blend_pixel_int(1, 2, 1, 1), Ok(2));
        assert_eq!(blend_pixel_int(0, 1, 1, 2), Ok(1));
    }

    #[test]
    fn zero_sheet_passes_blank() {
        let blank = GrayImage::from_fn(5, 4, |r, c| (r * 40 + c) as u8);
        let (out, trace) =
            stream_tune(&blank, &GrayImage::filled(5, 4, 0), &TuneConfig::default()).unwrap();
        assert_eq!(out, blank);
        assert!(trace.entries.is_empty());
    }

    #[test]
    fn tiny_images_pass_through() {
        let cfg = TuneConfig::default();
        for (w, h) in [(1, 1), (2, 5), (5, 2), (1, 4)] {
            let blank = GrayImage::from_fn(w, h, |r, c| (r * 3 + c) as u8);
            let sheet = GrayImage::filled(w, h, 200);
            let (out, trace) = stream_tune(&blank, &sheet, &cfg).unwrap();
            assert_eq!(out, blank);
            assert!(trace.entries.is_empty());
        }
    }

    #[test]
    fn trace_tsv_header() {
        let blank = GrayImage::filled(3, 3, 10);
        let sheet = GrayImage::filled(3, 3, 20);
        let (_, trace) = stream_tune(&blank, &sheet, &TuneConfig::default()).unwrap();
        let tsv = trace.to_tsv();
        assert_eq!(
            tsv,
            "x\ty\tFI\tCI\tnum\tden\tout\n1\t1\t90\t180\t5400\t360\t15\n"
        );
    }

    #[test]
    fn report_counts() {
        let a = GrayImage::filled(3, 3, 10);
        let r = equivalence_report(&a, &a).unwrap();
        assert_eq!((r.max_abs_diff, r.mismatch_count), (0, 0));
        let mut b = a.clone();
        b.set(1, 2, 13);
        let r = equivalence_report(&a, &b).unwrap();
        assert_eq!((r.max_abs_diff, r.mismatch_count), (3, 1));
        assert_eq!(r.diff.get(1, 2), 3);
    }

    #[test]
    fn text_flow_fixed_point_and_zero() {
        let cfg = TuneConfig::default();
        let hundred = "100\n".repeat(12);
        let (out, _) = run_textfile_flow(&hundred, &hundred, 4, 3, &cfg).unwrap();
        assert_eq!(out, hundred);
        let face: String = (0..12).map(|v| format!("{}\n", v * 20)).collect();
        let zero = "0\n".repeat(12);
        let (out, _) = run_textfile_flow(&face, &zero, 4, 3, &cfg).unwrap();
        assert_eq!(out, face);
        assert!(matches!(
            run_textfile_flow(&face, "0\n", 4, 3, &cfg),
            Err(DatapathError::Text(
                IntensityTextError::CountMismatch { .. }
            ))
        ));
    }
}
