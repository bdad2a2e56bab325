//! Parameterized component store and attribute queries.
//!
//! Every record carries one value for each parameter of its kind. Query-side
//! `CantSay` (or an omitted parameter) is a wildcard; record-side `CantSay`
//! is an ordinary value.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{binarize, otsu_threshold, BinaryMask, GrayImage, ImageError};
use crate::pgm::{load_pgm, save_pgm, PgmError};

/// Wildcard value.
pub const CANT_SAY: &str = "CantSay";

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown component kind {0:?}")]
    UnknownKind(String),
    #[error("mask is {mask_w}x{mask_h} but image is {image_w}x{image_h}")]
    DimensionMismatch {
        image_w: usize,
        image_h: usize,
        mask_w: usize,
        mask_h: usize,
    },
    #[error("cannot derive a mask: {0}")]
    MaskDerivation(#[from] ImageError),
    #[error("catalog i/o failure at {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt manifest at line {line}: {reason}")]
    CorruptManifest { line: usize, reason: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
}

/// The seven facial parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    FaceCutting,
    RightEyebrow,
    RightEye,
    LeftEyebrow,
    LeftEye,
    Nose,
    Lip,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 7] = [
        ComponentKind::FaceCutting,
        ComponentKind::RightEyebrow,
        ComponentKind::RightEye,
        ComponentKind::LeftEyebrow,
        ComponentKind::LeftEye,
        ComponentKind::Nose,
        ComponentKind::Lip,
    ];

    /// Everything placed on top of a face cutting, in compositing order.
    /// Later entries overwrite earlier ones where rectangles overlap.
    pub const COMPOSITE_ORDER: [ComponentKind; 6] = [
        ComponentKind::RightEyebrow,
        ComponentKind::LeftEyebrow,
        ComponentKind::RightEye,
        ComponentKind::LeftEye,
        ComponentKind::Nose,
        ComponentKind::Lip,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::FaceCutting => "FaceCutting",
            ComponentKind::RightEyebrow => "RightEyebrow",
            ComponentKind::RightEye => "RightEye",
            ComponentKind::LeftEyebrow => "LeftEyebrow",
            ComponentKind::LeftEye => "LeftEye",
            ComponentKind::Nose => "Nose",
            ComponentKind::Lip => "Lip",
        }
    }

    fn slug(self) -> &'static str {
        match self {
            ComponentKind::FaceCutting => "face",
            ComponentKind::RightEyebrow => "reyebrow",
            ComponentKind::RightEye => "reye",
            ComponentKind::LeftEyebrow => "leyebrow",
            ComponentKind::LeftEye => "leye",
            ComponentKind::Nose => "nose",
            ComponentKind::Lip => "lip",
        }
    }

    /// Parameter names and vocabularies for this kind.
    pub fn schema(self) -> &'static [ParamSpec] {
        match self {
            ComponentKind::FaceCutting => FACE_CUTTING,
            ComponentKind::RightEyebrow | ComponentKind::LeftEyebrow => EYEBROW,
            ComponentKind::RightEye | ComponentKind::LeftEye => EYE,
            ComponentKind::Nose => NOSE,
            ComponentKind::Lip => LIP,
        }
    }

    pub fn param_spec(self, name: &str) -> Option<&'static ParamSpec> {
        self.schema().iter().find(|p| p.name == name)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentKind {
    type Err = CatalogError;

    /// Case-insensitive; spaces, dashes and underscores are ignored, and
    /// "Lips" is accepted for `Lip`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        let kind = match key.as_str() {
            "facecutting" | "face" => ComponentKind::FaceCutting,
            "righteyebrow" => ComponentKind::RightEyebrow,
            "righteye" => ComponentKind::RightEye,
            "lefteyebrow" => ComponentKind::LeftEyebrow,
            "lefteye" => ComponentKind::LeftEye,
            "nose" => ComponentKind::Nose,
            "lip" | "lips" => ComponentKind::Lip,
            _ => return Err(CatalogError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

/// One parameter and its allowed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub values: &'static [&'static str],
}

const SIZE: &[&str] = &["Small", "Large", "Normal", CANT_SAY];
const DENSITY: &[&str] = &["HighlyDense", "LowDense", "Normal", CANT_SAY];

const FACE_CUTTING: &[ParamSpec] = &[
    ParamSpec {
        name: "Sex",
        values: &["Male", "Female"],
    },
    ParamSpec {
        name: "Shape",
        values: &["Oval", "Round", CANT_SAY],
    },
    ParamSpec {
        name: "HairDensity",
        values: DENSITY,
    },
];

const EYEBROW: &[ParamSpec] = &[
    ParamSpec {
        name: "Length",
        values: SIZE,
    },
    ParamSpec {
        name: "Width",
        values: SIZE,
    },
    ParamSpec {
        name: "Shape",
        values: &["Flat", "Round", "Wavy", "Artistic", CANT_SAY],
    },
    ParamSpec {
        name: "Hair",
        values: DENSITY,
    },
];

const EYE: &[ParamSpec] = &[
    ParamSpec {
        name: "Length",
        values: SIZE,
    },
    ParamSpec {
        name: "Width",
        values: SIZE,
    },
    ParamSpec {
        name: "Shape",
        values: &["Round", "Elliptic", CANT_SAY],
    },
];

const NOSE: &[ParamSpec] = &[
    ParamSpec {
        name: "Sharpness",
        values: &["Sharp", "Blunt", "Normal", CANT_SAY],
    },
    ParamSpec {
        name: "Length",
        values: SIZE,
    },
    ParamSpec {
        name: "Width",
        values: SIZE,
    },
];

const LIP: &[ParamSpec] = &[
    ParamSpec {
        name: "Length",
        values: &["Wide", "Small", "Normal", CANT_SAY],
    },
    ParamSpec {
        name: "Width",
        values: &["Thick", "Thin", "Normal", CANT_SAY],
    },
    ParamSpec {
        name: "Shape",
        values: &["Linear", "Wavy", CANT_SAY],
    },
];

/// Canonical spelling of a parameter value: whitespace removed, so
/// "Cant Say" and "Highly Dense" match `CantSay` and `HighlyDense`.
pub fn normalize_value(v: &str) -> String {
    v.split_whitespace().collect()
}

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamWarning {
    UnknownParameter { name: String },
    OutOfVocabulary { name: String, value: String },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::UnknownParameter { name } => write!(f, "unknown parameter {name:?}"),
            ParamWarning::OutOfVocabulary { name, value } => {
                write!(f, "value {value:?} for {name} is not in the vocabulary")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<ParamWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn validate_params(kind: ComponentKind, params: &Params) -> ValidationReport {
    let mut warnings = Vec::new();
    for (name, value) in params {
        match kind.param_spec(name) {
            None => warnings.push(ParamWarning::UnknownParameter { name: name.clone() }),
            Some(spec) => {
                let value = normalize_value(value);
                if !spec.values.contains(&value.as_str()) {
                    warnings.push(ParamWarning::OutOfVocabulary {
                        name: name.clone(),
                        value,
                    });
                }
            }
        }
    }
    ValidationReport { warnings }
}

/// Same as [`validate_params`] with the kind given by name.
pub fn validate_params_named(
    kind: &str,
    params: &Params,
) -> Result<ValidationReport, CatalogError> {
    Ok(validate_params(kind.parse()?, params))
}

/// Brings a parameter map onto the kind's schema: values are normalized,
/// missing names become `CantSay` and unknown names are dropped.
fn conform_params(kind: ComponentKind, params: &Params) -> Params {
    kind.schema()
        .iter()
        .map(|spec| {
            let v = params
                .get(spec.name)
                .map(|v| normalize_value(v))
                .unwrap_or_else(|| CANT_SAY.to_string());
            (spec.name.to_string(), v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentRecord {
    pub id: String,
    pub kind: ComponentKind,
    pub params: Params,
    pub image: GrayImage,
    /// Absent only for face cuttings, which are used whole.
    pub mask: Option<BinaryMask>,
    pub source: String,
}

impl ComponentRecord {
    /// The mask to composite with; an all-foreground mask when none is stored.
    pub fn effective_mask(&self) -> BinaryMask {
        self.mask
            .clone()
            .unwrap_or_else(|| BinaryMask::filled(self.image.width(), self.image.height(), false))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub kind: ComponentKind,
    #[serde(default)]
    pub desired: Params,
}

impl Query {
    pub fn any(kind: ComponentKind) -> Self {
        Self {
            kind,
            desired: Params::new(),
        }
    }

    pub fn with(mut self, name: &str, value: &str) -> Self {
        self.desired.insert(name.to_string(), value.to_string());
        self
    }

    /// Non-wildcard constraints, normalized.
    fn constraints(&self) -> impl Iterator<Item = (&str, String)> {
        self.desired
            .iter()
            .map(|(k, v)| (k.as_str(), normalize_value(v)))
            .filter(|(_, v)| v != CANT_SAY)
    }

    /// `Some(number of constraints)` if the record satisfies every constraint.
    pub fn score(&self, record: &ComponentRecord) -> Option<usize> {
        if record.kind != self.kind {
            return None;
        }
        let mut hits = 0;
        for (name, want) in self.constraints() {
            match record.params.get(name) {
                Some(have) if *have == want => hits += 1,
                _ => return None,
            }
        }
        Some(hits)
    }
}

/// In-memory set of records keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    records: BTreeMap<String, ComponentRecord>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ComponentRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ComponentRecord> {
        self.records.values()
    }

    pub fn insert(&mut self, record: ComponentRecord) -> Result<(), CatalogError> {
        if self.records.contains_key(&record.id) {
            return Err(CatalogError::DuplicateId(record.id));
        }
        self.records.insert(record.id.clone(), record);
        Ok(())
    }

    fn next_id(&self, kind: ComponentKind) -> String {
        let mut n = self.records.values().filter(|r| r.kind == kind).count() + 1;
        loop {
            let id = format!("{}-{:04}", kind.slug(), n);
            if !self.records.contains_key(&id) {
                return id;
            }
            n += 1;
        }
    }

    /// Adds a component, deriving its mask with Otsu when none is given
    /// (face cuttings are stored without a mask). Returns the new id and
    /// any parameter warnings.
    pub fn ingest(
        &mut self,
        kind: ComponentKind,
        params: &Params,
        image: GrayImage,
        mask: Option<BinaryMask>,
        source: &str,
    ) -> Result<(String, ValidationReport), CatalogError> {
        let report = validate_params(kind, params);
        if let Some(m) = &mask {
            if !image.same_dims(m) {
                return Err(CatalogError::DimensionMismatch {
                    image_w: image.width(),
                    image_h: image.height(),
                    mask_w: m.width(),
                    mask_h: m.height(),
                });
            }
        }
        let mask = match (mask, kind) {
            (Some(m), _) => Some(m),
            (None, ComponentKind::FaceCutting) => None,
            (None, _) => Some(binarize(&image, otsu_threshold(&image)?)),
        };
        let id = self.next_id(kind);
        self.insert(ComponentRecord {
            id: id.clone(),
            kind,
            params: conform_params(kind, params),
            image,
            mask,
            source: source.to_string(),
        })?;
        Ok((id, report))
    }

    /// Matching records ordered by descending number of matched constraints,
    /// then by id.
    pub fn match_query(&self, q: &Query) -> Vec<&ComponentRecord> {
        let mut hits: Vec<(usize, &ComponentRecord)> = self
            .records
            .values()
            .filter_map(|r| q.score(r).map(|s| (s, r)))
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        hits.into_iter().map(|(_, r)| r).collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CatalogError + '_ {
    move |source| CatalogError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(ch),
        }
    }
    out
}

fn unescape_field(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            't' => out.push('\t'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            _ => return None,
        }
    }
    Some(out)
}

fn is_safe_file_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\'])
        && name != MANIFEST_FILE
}

/// Writes `manifest.tsv` plus one canonical PGM per image and mask under `root`.
///
/// Manifest lines are tab-separated: `id kind image-file mask-file source`
/// followed by `name=value` pairs. `mask-file` is `-` when absent.
pub fn save_catalog(catalog: &Catalog, root: &Path) -> Result<(), CatalogError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let mut manifest = String::new();
    for r in catalog.records() {
        if !is_safe_file_name(&r.id) || r.id.contains(['\t', '\n', '\r', '=']) {
            return Err(CatalogError::CorruptManifest {
                line: 0,
                reason: format!("id {:?} cannot be used as a file name", r.id),
            });
        }
        let image_file = format!("{}.pgm", r.id);
        let path = root.join(&image_file);
        fs::write(&path, save_pgm(&r.image)).map_err(io_err(&path))?;
        let mask_file = match &r.mask {
            Some(m) => {
                let name = format!("{}.mask.pgm", r.id);
                let path = root.join(&name);
                fs::write(&path, save_pgm(&m.to_image())).map_err(io_err(&path))?;
                name
            }
            None => "-".to_string(),
        };
        let mut fields = vec![
            r.id.clone(),
            r.kind.to_string(),
            image_file,
            mask_file,
            escape_field(&r.source),
        ];
        fields.extend(
            r.params
                .iter()
                .map(|(k, v)| format!("{}={}", escape_field(k), escape_field(v))),
        );
        manifest.push_str(&fields.join("\t"));
        manifest.push('\n');
    }
    // write-then-rename so a reader never sees a half-written manifest
    let tmp = root.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, manifest).map_err(io_err(&tmp))?;
    let dst = root.join(MANIFEST_FILE);
    fs::rename(&tmp, &dst).map_err(io_err(&dst))?;
    Ok(())
}

pub fn load_catalog(root: &Path) -> Result<Catalog, CatalogError> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut catalog = Catalog::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| CatalogError::CorruptManifest {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 5 {
            return Err(corrupt(format!(
                "expected at least 5 fields, found {}",
                fields.len()
            )));
        }
        let id = fields[0].to_string();
        let kind: ComponentKind = fields[1]
            .parse()
            .map_err(|_| corrupt(format!("unknown kind {:?}", fields[1])))?;
        let source =
            unescape_field(fields[4]).ok_or_else(|| corrupt("bad escape in source".into()))?;

        let read_pgm = |name: &str| -> Result<GrayImage, CatalogError> {
            if !is_safe_file_name(name) {
                return Err(corrupt(format!("illegal file name {name:?}")));
            }
            let p = root.join(name);
            let bytes = fs::read(&p).map_err(|e| corrupt(format!("cannot read {name}: {e}")))?;
            load_pgm(&bytes).map_err(|e: PgmError| corrupt(format!("{name}: {e}")))
        };
        let image = read_pgm(fields[2])?;
        let mask = match fields[3] {
            "-" => None,
            name => {
                let m = BinaryMask::from_image(&read_pgm(name)?);
                if !image.same_dims(&m) {
                    return Err(corrupt(format!(
                        "mask {name} does not match image dimensions"
                    )));
                }
                Some(m)
            }
        };
        let mut params = Params::new();
        for pair in &fields[5..] {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| corrupt(format!("parameter {pair:?} lacks '='")))?;
            let k = unescape_field(k).ok_or_else(|| corrupt("bad escape in name".into()))?;
            let v = unescape_field(v).ok_or_else(|| corrupt("bad escape in value".into()))?;
            params.insert(k, v);
        }
        catalog
            .insert(ComponentRecord {
                id,
                kind,
                params,
                image,
                mask,
                source,
            })
            .map_err(|e| corrupt(e.to_string()))?;
    }
    Ok(catalog)
}
