//! Synthetic face cuttings and components.
//!
//! Used for the demo catalog served when no catalog directory is given and
//! for reproducible fixtures in tests. Everything here is deterministic.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Catalog, ComponentKind, Params, Query, CANT_SAY};
use crate::image::{BinaryMask, GrayImage};

/// Face cutting size used throughout the demo data, width x height.
pub const FACE_WIDTH: usize = 92;
pub const FACE_HEIGHT: usize = 112;

/// Seed of the built-in demo catalog.
pub const DEMO_SEED: u64 = 0x5eed_f00d;

fn inside_ellipse(r: usize, c: usize, h: usize, w: usize) -> bool {
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let dy = (r as f64 - cy) / (h as f64 / 2.0);
    let dx = (c as f64 - cx) / (w as f64 / 2.0);
    dx * dx + dy * dy <= 1.0
}

/// Mask with 0 inside the ellipse inscribed in an `h x w` rectangle.
pub fn ellipse_mask(height: usize, width: usize) -> BinaryMask {
    BinaryMask::from_fn(width, height, |r, c| !inside_ellipse(r, c, height, width))
}

/// Flat ellipse of `fg` on a flat `bg` rectangle.
pub fn elliptical_component(height: usize, width: usize, fg: u8, bg: u8) -> GrayImage {
    GrayImage::from_fn(width, height, |r, c| {
        if inside_ellipse(r, c, height, width) {
            fg
        } else {
            bg
        }
    })
}

/// Face cutting whose binarized ear anchor is exactly `(row, col)`: black
/// left of `col`, a one-column ear strip at `col` from `row` down, and a flat
/// `level` head everywhere to its right.
pub fn anchored_face(width: usize, height: usize, row: usize, col: usize, level: u8) -> GrayImage {
    GrayImage::from_fn(width, height, |r, c| {
        if c > col || (c == col && r >= row) {
            level
        } else {
            0
        }
    })
}

/// Component dimensions `(height, width)` whose layout from anchor (10, 20)
/// is the documented reference layout.
pub const FIXTURE_DIMS: [(ComponentKind, usize, usize); 6] = [
    (ComponentKind::RightEyebrow, 6, 20),
    (ComponentKind::RightEye, 8, 12),
    (ComponentKind::LeftEyebrow, 6, 20),
    (ComponentKind::LeftEye, 8, 12),
    (ComponentKind::Nose, 30, 15),
    (ComponentKind::Lip, 9, 18),
];

pub const FIXTURE_ANCHOR: (usize, usize) = (10, 20);

/// Catalog with one record per kind: a flat `face_level` face anchored at
/// (10, 20) and flat `comp_level` elliptical components on black, with
/// exact ellipse masks.
pub fn fixture_catalog(face_level: u8, comp_level: u8) -> Catalog {
    let mut cat = Catalog::new();
    let face = anchored_face(
        FACE_WIDTH,
        FACE_HEIGHT,
        FIXTURE_ANCHOR.0,
        FIXTURE_ANCHOR.1,
        face_level,
    );
    cat.ingest(
        ComponentKind::FaceCutting,
        &Params::new(),
        face,
        None,
        "synthetic fixture",
    )
    .expect("fixture face");
    for (kind, h, w) in FIXTURE_DIMS {
        cat.ingest(
            kind,
            &Params::new(),
            elliptical_component(h, w, comp_level, 0),
            Some(ellipse_mask(h, w)),
            "synthetic fixture",
        )
        .expect("fixture component");
    }
    cat
}

/// Every kind with an all-wildcard query.
pub fn wildcard_description() -> BTreeMap<ComponentKind, Query> {
    ComponentKind::ALL
        .iter()
        .map(|&k| (k, Query::any(k)))
        .collect()
}

fn params(pairs: &[(&str, &str)]) -> Params {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// A worked description: a male oval face with normal hair, large densely
/// haired elliptic eyebrows, normal elliptic eyes, a normal nose and normal
/// lips of unspecified shape.
pub fn worked_description() -> BTreeMap<ComponentKind, Query> {
    let eyebrow = params(&[
        ("Length", "Large"),
        ("Width", "Normal"),
        ("Shape", "Elliptic"),
        ("Hair", "HighlyDense"),
    ]);
    let eye = params(&[
        ("Length", "Normal"),
        ("Width", "Normal"),
        ("Shape", "Elliptic"),
    ]);
    let entries = [
        (
            ComponentKind::FaceCutting,
            params(&[
                ("Sex", "Male"),
                ("Shape", "Oval"),
                ("HairDensity", "Normal"),
            ]),
        ),
        (ComponentKind::RightEyebrow, eyebrow.clone()),
        (ComponentKind::RightEye, eye.clone()),
        (ComponentKind::LeftEyebrow, eyebrow),
        (ComponentKind::LeftEye, eye),
        (
            ComponentKind::Nose,
            params(&[
                ("Sharpness", "Normal"),
                ("Length", "Normal"),
                ("Width", "Normal"),
            ]),
        ),
        (
            ComponentKind::Lip,
            params(&[
                ("Length", "Normal"),
                ("Width", "Normal"),
                ("Shape", CANT_SAY),
            ]),
        ),
    ];
    entries
        .into_iter()
        .map(|(kind, desired)| (kind, Query { kind, desired }))
        .collect()
}

fn noisy(rng: &mut ChaCha8Rng, v: f64, amp: f64) -> u8 {
    (v + rng.gen_range(-amp..=amp)).round().clamp(0.0, 255.0) as u8
}

struct FaceSpec {
    male: bool,
    round: bool,
    /// 0 = sparse .. 2 = dense
    hair: u8,
    skin: f64,
    ear_row: f64,
}

fn synth_face(rng: &mut ChaCha8Rng, s: &FaceSpec) -> GrayImage {
    let (cy, cx) = (58.0, 48.0);
    let (ry, rx) = if s.round { (42.0, 33.0) } else { (46.0, 30.0) };
    let hair_line = if s.male { 30.0 } else { 36.0 };
    let hair_level = [95.0, 70.0, 45.0][s.hair as usize];
    let ear = |r: f64, c: f64, ecx: f64| {
        let dy = (r - s.ear_row) / 9.0;
        let dx = (c - ecx) / 4.5;
        dx * dx + dy * dy <= 1.0
    };
    GrayImage::from_fn(FACE_WIDTH, FACE_HEIGHT, |r, c| {
        let (rf, cf) = (r as f64, c as f64);
        let dy = (rf - cy) / ry;
        let dx = (cf - cx) / rx;
        let d2 = dx * dx + dy * dy;
        let in_head = d2 <= 1.0;
        let base = if in_head && rf < hair_line + 6.0 * dx.abs() {
            hair_level
        } else if in_head {
            // mild shading toward the rim
            s.skin - 18.0 * d2
        } else if ear(rf, cf, cx - rx - 1.5) || ear(rf, cf, cx + rx + 1.5) {
            s.skin - 12.0
        } else if !s.male && rf < 80.0 && (cf - cx).abs() < rx + 9.0 && rf > 14.0 {
            // long hair framing the face
            hair_level + 10.0
        } else {
            22.0
        };
        noisy(rng, base, 3.0)
    })
}

fn synth_eyebrow(rng: &mut ChaCha8Rng, h: usize, w: usize, darkness: f64, arch: f64) -> GrayImage {
    GrayImage::from_fn(w, h, |r, c| {
        let t = c as f64 / (w as f64 - 1.0);
        let centre = (h as f64 - 1.0) / 2.0 + arch * (2.0 * t - 1.0).powi(2) - arch / 2.0;
        let half = (h as f64 / 2.0 - 1.0) * (1.0 - 0.5 * (2.0 * t - 1.0).powi(4));
        let v = if (r as f64 - centre).abs() <= half {
            darkness
        } else {
            150.0
        };
        noisy(rng, v, 4.0)
    })
}

fn synth_eye(rng: &mut ChaCha8Rng, h: usize, w: usize, round: bool) -> GrayImage {
    let iris = if round {
        h as f64 * 0.45
    } else {
        h as f64 * 0.35
    };
    GrayImage::from_fn(w, h, |r, c| {
        let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
        let v = if ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt() <= iris {
            35.0
        } else if inside_ellipse(r, c, h, w) {
            80.0
        } else {
            152.0
        };
        noisy(rng, v, 4.0)
    })
}

fn synth_nose(rng: &mut ChaCha8Rng, h: usize, w: usize, sharp: bool) -> GrayImage {
    let ridge = if sharp { 1.0 } else { 2.0 };
    GrayImage::from_fn(w, h, |r, c| {
        let (rf, cf) = (r as f64, c as f64);
        let cx = (w as f64 - 1.0) / 2.0;
        let nostril = |side: f64| {
            let dy = (rf - (h as f64 - 4.0)) / 2.2;
            let dx = (cf - (cx + side * w as f64 * 0.25)) / 2.5;
            dx * dx + dy * dy <= 1.0
        };
        let v = if nostril(-1.0) || nostril(1.0) {
            60.0
        } else if rf < h as f64 - 6.0 && (cf - cx + ridge * 2.0).abs() <= ridge && rf > 2.0 {
            100.0
        } else {
            150.0
        };
        noisy(rng, v, 4.0)
    })
}

fn synth_lip(rng: &mut ChaCha8Rng, h: usize, w: usize, wavy: bool) -> GrayImage {
    GrayImage::from_fn(w, h, |r, c| {
        let wobble = if wavy {
            0.8 * ((c as f64) * 0.8).sin()
        } else {
            0.0
        };
        let rr = ((r as f64 + wobble).round().clamp(0.0, h as f64 - 1.0)) as usize;
        let v = if inside_ellipse(rr, c, h, w) {
            if r == h / 2 {
                55.0
            } else {
                95.0
            }
        } else {
            150.0
        };
        noisy(rng, v, 4.0)
    })
}

/// Deterministic demo catalog that covers the worked description in
/// [`worked_description`] plus variations of every parameter.
pub fn demo_catalog(seed: u64) -> Catalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cat = Catalog::new();
    let src = "synthetic demo";

    let faces = [
        (true, false, 1, "Male", "Oval", "Normal"),
        (true, true, 2, "Male", "Round", "HighlyDense"),
        (false, false, 1, "Female", "Oval", "Normal"),
        (false, true, 0, "Female", "Round", "LowDense"),
        (true, false, 2, "Male", "Oval", "HighlyDense"),
    ];
    for (i, (male, round, hair, sex, shape, dens)) in faces.into_iter().enumerate() {
        let spec = FaceSpec {
            male,
            round,
            hair,
            skin: 150.0 + 8.0 * i as f64,
            ear_row: 50.0 + i as f64,
        };
        let img = synth_face(&mut rng, &spec);
        cat.ingest(
            ComponentKind::FaceCutting,
            &params(&[("Sex", sex), ("Shape", shape), ("HairDensity", dens)]),
            img,
            None,
            src,
        )
        .expect("demo face");
    }

    let eyebrows = [
        (
            7,
            22,
            40.0,
            1.5,
            "Large",
            "Normal",
            "Elliptic",
            "HighlyDense",
        ),
        (6, 20, 55.0, 2.0, "Normal", "Normal", "Round", "Normal"),
        (5, 16, 70.0, 0.0, "Small", "Small", "Flat", "LowDense"),
        (8, 22, 45.0, 2.5, "Large", "Large", "Wavy", "HighlyDense"),
    ];
    for kind in [ComponentKind::RightEyebrow, ComponentKind::LeftEyebrow] {
        for (h, w, dark, arch, len, wid, shape, hair) in eyebrows {
            let img = synth_eyebrow(&mut rng, h, w, dark, arch);
            cat.ingest(
                kind,
                &params(&[
                    ("Length", len),
                    ("Width", wid),
                    ("Shape", shape),
                    ("Hair", hair),
                ]),
                img,
                None,
                src,
            )
            .expect("demo eyebrow");
        }
    }

    let eyes = [
        (9, 16, false, "Normal", "Normal", "Elliptic"),
        (10, 14, true, "Normal", "Normal", "Round"),
        (8, 18, false, "Large", "Small", "Elliptic"),
    ];
    for kind in [ComponentKind::RightEye, ComponentKind::LeftEye] {
        for (h, w, round, len, wid, shape) in eyes {
            let img = synth_eye(&mut rng, h, w, round);
            cat.ingest(
                kind,
                &params(&[("Length", len), ("Width", wid), ("Shape", shape)]),
                img,
                None,
                src,
            )
            .expect("demo eye");
        }
    }

    let noses = [
        (22, 16, false, "Normal", "Normal", "Normal"),
        (26, 14, true, "Sharp", "Large", "Small"),
        (20, 18, false, "Blunt", "Small", "Large"),
    ];
    for (h, w, sharp, sh, len, wid) in noses {
        let img = synth_nose(&mut rng, h, w, sharp);
        cat.ingest(
            ComponentKind::Nose,
            &params(&[("Sharpness", sh), ("Length", len), ("Width", wid)]),
            img,
            None,
            src,
        )
        .expect("demo nose");
    }

    let lips = [
        (10, 24, false, "Normal", "Normal", "Linear"),
        (12, 26, true, "Normal", "Normal", "Wavy"),
        (8, 28, false, "Wide", "Thin", "Linear"),
        (13, 20, true, "Small", "Thick", "Wavy"),
    ];
    for (h, w, wavy, len, wid, shape) in lips {
        let img = synth_lip(&mut rng, h, w, wavy);
        cat.ingest(
            ComponentKind::Lip,
            &params(&[("Length", len), ("Width", wid), ("Shape", shape)]),
            img,
            None,
            src,
        )
        .expect("demo lip");
    }
    cat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::find_ear_position;
    use crate::image::{binarize, otsu_threshold};

    #[test]
    fn anchored_face_anchor() {
        let face = anchored_face(FACE_WIDTH, FACE_HEIGHT, 10, 20, 120);
        let t = otsu_threshold(&face).unwrap();
        let a = find_ear_position(&binarize(&face, t)).unwrap();
        assert_eq!((a.row, a.col), (10, 20));
    }

    #[test]
    fn demo_catalog_is_deterministic() {
        assert_eq!(demo_catalog(DEMO_SEED), demo_catalog(DEMO_SEED));
        assert_eq!(demo_catalog(DEMO_SEED).len(), 5 + 8 + 6 + 3 + 4);
    }

    #[test]
    fn demo_components_have_foreground_masks() {
        let cat = demo_catalog(DEMO_SEED);
        for rec in cat.records() {
            if rec.kind == ComponentKind::FaceCutting {
                assert!(rec.mask.is_none());
                continue;
            }
            let m = rec.mask.as_ref().unwrap();
            let zeros = m.count_zeros();
            assert!(zeros > 0 && zeros < m.bits().len(), "{}", rec.id);
        }
    }
}
