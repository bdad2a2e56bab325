use std::collections::BTreeMap;

use photofit_core::assembler::{
    compute_layout, find_ear_position, overlay_blind, overlay_masked, AnchorPoint, ComponentDims,
    Placement,
};
use photofit_core::catalog::ComponentKind;
use photofit_core::image::{BinaryMask, GrayImage};
use proptest::prelude::*;

fn ear_oracle(mask: &BinaryMask) -> Option<(usize, usize)> {
    let mut white = Vec::new();
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            if mask.get(r, c) == 1 {
                white.push((c, r));
            }
        }
    }
    white.into_iter().min().map(|(c, r)| (r, c))
}

fn arb_mask() -> impl Strategy<Value = BinaryMask> {
    (1..20usize, 1..20usize, 0.0f64..0.2).prop_flat_map(|(w, h, density)| {
        proptest::collection::vec(proptest::bool::weighted(density), w * h).prop_map(move |bits| {
            BinaryMask::new(w, h, bits.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}

fn arb_dims() -> impl Strategy<Value = BTreeMap<ComponentKind, ComponentDims>> {
    proptest::collection::vec((1..40usize, 1..40usize), 6).prop_map(|v| {
        ComponentKind::COMPOSITE_ORDER
            .iter()
            .zip(v)
            .map(|(&k, (height, width))| (k, ComponentDims { height, width }))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ear_scan_matches_column_major_min(mask in arb_mask()) {
        let got = find_ear_position(&mask).ok().map(|a| (a.row, a.col));
        prop_assert_eq!(got, ear_oracle(&mask));
    }

    #[test]
    fn layout_is_translation_covariant(
        dims in arb_dims(),
        row in 0usize..200,
        col in 0usize..200,
        dr in 0usize..50,
        dc in 0usize..50,
    ) {
        let a = compute_layout(AnchorPoint { row, col }, &dims);
        let b = compute_layout(AnchorPoint { row: row + dr, col: col + dc }, &dims);
        if let Ok(a) = a {
            let b = b.expect("shifting away from the border keeps coordinates valid");
            for (k, pa) in &a.placements {
                let pb = b.placements[k];
                prop_assert_eq!((pb.top_row, pb.left_col), (pa.top_row + dr, pa.left_col + dc));
                prop_assert_eq!((pb.height, pb.width), (pa.height, pa.width));
            }
        }
    }

    #[test]
    fn overlays_match_per_pixel_oracle(
        seed in any::<u64>(),
        fw in 4usize..20, fh in 4usize..20,
        cw in 1usize..8, ch in 1usize..8,
        top_frac in 0.0f64..1.0, left_frac in 0.0f64..1.0,
    ) {
        let (ch, cw) = (ch.min(fh), cw.min(fw));
        let top = ((fh - ch + 1) as f64 * top_frac) as usize;
        let left = ((fw - cw + 1) as f64 * left_frac) as usize;
        let mut s = seed;
        let mut next = move || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) as u8 };
        let face = GrayImage::from_fn(fw, fh, |_, _| next());
        let comp = GrayImage::from_fn(cw, ch, |_, _| next());
        let mask = BinaryMask::from_fn(cw, ch, |r, c| (r * 3 + c) % 4 == 0);
        let p = Placement { kind: ComponentKind::Nose, top_row: top, left_col: left, height: ch, width: cw };
        let blind = overlay_blind(&face, &comp, &p).unwrap();
        let masked = overlay_masked(&face, &comp, &mask, &p).unwrap();
        for r in 0..fh {
            for c in 0..fw {
                let inside = p.contains(r, c);
                let want_blind = if inside { comp.get(r - top, c - left) } else { face.get(r, c) };
                prop_assert_eq!(blind.get(r, c), want_blind);
                let want_masked = if inside && mask.get(r - top, c - left) == 0 {
                    comp.get(r - top, c - left)
                } else {
                    face.get(r, c)
                };
                prop_assert_eq!(masked.get(r, c), want_masked);
            }
        }
        let ones = BinaryMask::filled(cw, ch, true);
        prop_assert_eq!(overlay_masked(&face, &comp, &ones, &p).unwrap(), face);
    }
}

#[test]
fn overlay_with_identical_region_is_identity() {
    let face = GrayImage::from_fn(10, 8, |r, c| (r * 10 + c) as u8);
    let comp = GrayImage::from_fn(3, 2, |r, c| face.get(r + 4, c + 5));
    let p = Placement {
        kind: ComponentKind::Lip,
        top_row: 4,
        left_col: 5,
        height: 2,
        width: 3,
    };
    assert_eq!(overlay_blind(&face, &comp, &p).unwrap(), face);
}
