use std::fs;

use photofit_core::catalog::{
    load_catalog, save_catalog, Catalog, CatalogError, ComponentKind, Params, Query, CANT_SAY,
    MANIFEST_FILE,
};
use photofit_core::image::{BinaryMask, GrayImage};
use proptest::prelude::*;

const NOSE_VALUES: [&str; 4] = ["Sharp", "Blunt", "Normal", CANT_SAY];
const SIZE_VALUES: [&str; 4] = ["Small", "Large", "Normal", CANT_SAY];

fn nose_catalog(rows: &[(usize, usize, usize)]) -> Catalog {
    let mut cat = Catalog::new();
    for &(s, l, w) in rows {
        let params: Params = [
            ("Sharpness", NOSE_VALUES[s]),
            ("Length", SIZE_VALUES[l]),
            ("Width", SIZE_VALUES[w]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        cat.ingest(
            ComponentKind::Nose,
            &params,
            GrayImage::filled(2, 2, 1),
            Some(BinaryMask::filled(2, 2, false)),
            "",
        )
        .unwrap();
    }
    cat
}

fn query_from(spec: &[(usize, Option<usize>)]) -> Query {
    let names = ["Sharpness", "Length", "Width"];
    let mut q = Query::any(ComponentKind::Nose);
    for (i, choice) in spec.iter().enumerate() {
        if let (n, Some(v)) = choice {
            let vocab = if *n == 0 { &NOSE_VALUES } else { &SIZE_VALUES };
            q = q.with(names[i], vocab[*v]);
        }
    }
    q
}

fn naive_match(cat: &Catalog, q: &Query) -> Vec<String> {
    let mut ids: Vec<String> = cat
        .records()
        .filter(|r| r.kind == q.kind)
        .filter(|r| {
            q.desired
                .iter()
                .all(|(k, v)| v == CANT_SAY || r.params.get(k) == Some(v))
        })
        .map(|r| r.id.clone())
        .collect();
    ids.sort();
    ids
}

fn arb_rows() -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
    proptest::collection::vec((0..4usize, 0..4usize, 0..4usize), 0..25)
}

fn arb_query_spec() -> impl Strategy<Value = Vec<(usize, Option<usize>)>> {
    (
        proptest::option::of(0..4usize),
        proptest::option::of(0..4usize),
        proptest::option::of(0..4usize),
    )
        .prop_map(|(a, b, c)| vec![(0, a), (1, b), (2, c)])
}

proptest! {
    #[test]
    fn match_agrees_with_linear_scan(rows in arb_rows(), spec in arb_query_spec()) {
        let cat = nose_catalog(&rows);
        let q = query_from(&spec);
        let got: Vec<String> = cat.match_query(&q).iter().map(|r| r.id.clone()).collect();
        prop_assert_eq!(got, naive_match(&cat, &q));
    }

    #[test]
    fn adding_a_constraint_never_enlarges(
        rows in arb_rows(),
        spec in arb_query_spec(),
        slot in 0..3usize,
        extra in 0..4usize,
    ) {
        let cat = nose_catalog(&rows);
        let mut tighter_spec = spec.clone();
        tighter_spec[slot].1 = tighter_spec[slot].1.or(Some(extra));
        let loose: Vec<_> = cat.match_query(&query_from(&spec)).iter().map(|r| r.id.clone()).collect();
        let tight: Vec<_> = cat.match_query(&query_from(&tighter_spec)).iter().map(|r| r.id.clone()).collect();
        prop_assert!(tight.len() <= loose.len());
        for id in &tight {
            prop_assert!(loose.contains(id));
        }
    }
}

#[test]
fn empty_catalog_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    save_catalog(&Catalog::new(), dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap(),
        ""
    );
    assert!(load_catalog(dir.path()).unwrap().is_empty());
}

#[test]
fn records_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cat = Catalog::new();
    let face = GrayImage::from_fn(9, 7, |r, c| (r * 30 + c) as u8);
    cat.ingest(
        ComponentKind::FaceCutting,
        &[("Sex".to_string(), "Female".to_string())].into(),
        face,
        None,
        "portrait\twith tab",
    )
    .unwrap();
    let nose = GrayImage::from_fn(4, 6, |r, c| if r > 2 && c % 2 == 0 { 40 } else { 170 });
    let (nose_id, _) = cat
        .ingest(
            ComponentKind::Nose,
            &Params::new(),
            nose.clone(),
            None,
            "auto mask",
        )
        .unwrap();
    save_catalog(&cat, dir.path()).unwrap();
    let back = load_catalog(dir.path()).unwrap();
    assert_eq!(back, cat);
    assert_eq!(back.get(&nose_id).unwrap().image, nose);
}

#[test]
fn manifest_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut cat = Catalog::new();
    cat.ingest(
        ComponentKind::Lip,
        &[("Shape".to_string(), "Wavy".to_string())].into(),
        GrayImage::filled(3, 2, 9),
        Some(BinaryMask::filled(3, 2, false)),
        "hand drawn",
    )
    .unwrap();
    save_catalog(&cat, dir.path()).unwrap();
    let manifest = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(
        manifest,
        "lip-0001\tLip\tlip-0001.pgm\tlip-0001.mask.pgm\thand drawn\tLength=CantSay\tShape=Wavy\tWidth=CantSay\n"
    );
    assert!(dir.path().join("lip-0001.pgm").exists());
}

#[test]
fn missing_image_is_corrupt_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join(MANIFEST_FILE),
        "nose-0001\tNose\tnose-0001.pgm\t-\tsrc\tSharpness=Sharp\n",
    )
    .unwrap();
    match load_catalog(dir.path()) {
        Err(CatalogError::CorruptManifest { line: 1, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bad_lines_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let mut cat = Catalog::new();
    cat.ingest(
        ComponentKind::Nose,
        &Params::new(),
        GrayImage::filled(2, 2, 3),
        Some(BinaryMask::filled(2, 2, false)),
        "",
    )
    .unwrap();
    save_catalog(&cat, dir.path()).unwrap();
    let good = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    for (bad, line) in [
        ("x\tEar\tnose-0001.pgm\t-\t\n", 2),
        ("short\tNose\n", 2),
        ("y\tNose\tnose-0001.pgm\t-\t\tnoequals\n", 2),
        ("z\tNose\t../etc/passwd\t-\t\n", 2),
    ] {
        fs::write(dir.path().join(MANIFEST_FILE), format!("{good}{bad}")).unwrap();
        match load_catalog(dir.path()) {
            Err(CatalogError::CorruptManifest { line: l, .. }) => assert_eq!(l, line, "{bad:?}"),
            other => panic!("{bad:?}: unexpected {other:?}"),
        }
    }
}

#[test]
fn missing_root_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_catalog(&dir.path().join("nope")),
        Err(CatalogError::IoFailure { .. })
    ));
}
