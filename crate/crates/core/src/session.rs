//! The interactive construction loop: describe, retrieve, select, assemble,
//! tune and reposition.
//!
//! A session is a pure function of its action log. Every action is checked
//! against the current status and either applied completely or rejected with
//! the state untouched, so replaying a transcript against the same catalog
//! reproduces the same stage images.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::{
    compute_layout, find_ear_position, overlay_blind, overlay_masked, AssembleError, ComponentDims,
    Layout, Placement,
};
use crate::catalog::{
    validate_params, Catalog, ComponentKind, ComponentRecord, ParamWarning, Query,
};
use crate::image::{binarize, otsu_threshold, GrayImage, Threshold};
use crate::tuning::{tune_masked, TuneConfig, TuneError};

/// Threshold used to binarize a face cutting whose histogram has a single bin.
const FALLBACK_FACE_THRESHOLD: Threshold = Threshold(128);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Blind,
    Masked,
    Tuned,
}

impl std::str::FromStr for Stage {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blind" => Ok(Stage::Blind),
            "masked" => Ok(Stage::Masked),
            "tuned" => Ok(Stage::Tuned),
            _ => Err(SessionError::UnknownStage(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Describing,
    Selecting,
    Assembled,
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Describe {
        description: BTreeMap<ComponentKind, Query>,
    },
    Select {
        kind: ComponentKind,
        record_id: String,
    },
    Assemble,
    Tune {
        config: TuneConfig,
    },
    Nudge {
        kind: ComponentKind,
        d_row: i64,
        d_col: i64,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("description lacks {0}")]
    MissingKind(ComponentKind),
    #[error("description entry {key} holds a query for {query}")]
    KindMismatch {
        key: ComponentKind,
        query: ComponentKind,
    },
    #[error("{record_id:?} is not a candidate for {kind}")]
    NotACandidate {
        kind: ComponentKind,
        record_id: String,
    },
    #[error("{0} cannot be repositioned")]
    NotMovable(ComponentKind),
    #[error("{action} is not allowed while {status:?}")]
    IllegalTransition {
        action: &'static str,
        status: Status,
    },
    #[error("no selection for {0}")]
    MissingSelection(ComponentKind),
    #[error("record {0:?} vanished from the catalog")]
    MissingRecord(String),
    #[error("stage {0:?} has not been computed")]
    StageNotReady(Stage),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Tune(#[from] TuneError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    id: String,
    status: Status,
    description: BTreeMap<ComponentKind, Query>,
    warnings: BTreeMap<ComponentKind, Vec<ParamWarning>>,
    candidates: BTreeMap<ComponentKind, Vec<String>>,
    selections: BTreeMap<ComponentKind, String>,
    layout: Option<Layout>,
    offsets: BTreeMap<ComponentKind, (i64, i64)>,
    tune_config: Option<TuneConfig>,
    stages: BTreeMap<Stage, GrayImage>,
    transcript: Vec<Action>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            status: Status::Describing,
            description: BTreeMap::new(),
            warnings: BTreeMap::new(),
            candidates: BTreeMap::new(),
            selections: BTreeMap::new(),
            layout: None,
            offsets: BTreeMap::new(),
            tune_config: None,
            stages: BTreeMap::new(),
            transcript: Vec::new(),
        }
    }

    /// Rebuilds a session by applying a recorded action log.
    pub fn replay(
        id: impl Into<String>,
        catalog: &Catalog,
        transcript: &[Action],
    ) -> Result<Self, SessionError> {
        let mut s = Session::new(id);
        for action in transcript {
            s.apply(catalog, action.clone())?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn description(&self) -> &BTreeMap<ComponentKind, Query> {
        &self.description
    }

    pub fn warnings(&self) -> &BTreeMap<ComponentKind, Vec<ParamWarning>> {
        &self.warnings
    }

    pub fn candidates(&self) -> &BTreeMap<ComponentKind, Vec<String>> {
        &self.candidates
    }

    pub fn selections(&self) -> &BTreeMap<ComponentKind, String> {
        &self.selections
    }

    pub fn all_selected(&self) -> bool {
        ComponentKind::ALL
            .iter()
            .all(|k| self.selections.contains_key(k))
    }

    /// Layout computed from the ear anchor, before manual offsets.
    pub fn base_layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn offsets(&self) -> &BTreeMap<ComponentKind, (i64, i64)> {
        &self.offsets
    }

    pub fn tune_config(&self) -> Option<&TuneConfig> {
        self.tune_config.as_ref()
    }

    pub fn transcript(&self) -> &[Action] {
        &self.transcript
    }

    pub fn stage(&self, stage: Stage) -> Result<&GrayImage, SessionError> {
        self.stages
            .get(&stage)
            .ok_or(SessionError::StageNotReady(stage))
    }

    pub fn computed_stages(&self) -> impl Iterator<Item = Stage> + '_ {
        self.stages.keys().copied()
    }

    /// Placements with manual offsets applied.
    pub fn effective_layout(&self) -> Option<Layout> {
        let base = self.layout.as_ref()?;
        let mut layout = base.clone();
        for (kind, p) in layout.placements.iter_mut() {
            let (dr, dc) = self.offsets.get(kind).copied().unwrap_or((0, 0));
            p.top_row = (p.top_row as i64 + dr) as usize;
            p.left_col = (p.left_col as i64 + dc) as usize;
        }
        Some(layout)
    }

    /// Applies one action atomically and records it in the transcript.
    pub fn apply(&mut self, catalog: &Catalog, action: Action) -> Result<(), SessionError> {
        let mut next = self.clone();
        next.apply_inner(catalog, &action)?;
        next.transcript.push(action);
        *self = next;
        Ok(())
    }

    pub fn submit_description(
        &mut self,
        catalog: &Catalog,
        description: BTreeMap<ComponentKind, Query>,
    ) -> Result<(), SessionError> {
        self.apply(catalog, Action::Describe { description })
    }

    pub fn select_candidate(
        &mut self,
        catalog: &Catalog,
        kind: ComponentKind,
        record_id: &str,
    ) -> Result<(), SessionError> {
        self.apply(
            catalog,
            Action::Select {
                kind,
                record_id: record_id.to_string(),
            },
        )
    }

    pub fn assemble(&mut self, catalog: &Catalog) -> Result<(), SessionError> {
        self.apply(catalog, Action::Assemble)
    }

    pub fn tune(&mut self, catalog: &Catalog, config: TuneConfig) -> Result<(), SessionError> {
        self.apply(catalog, Action::Tune { config })
    }

    pub fn nudge(
        &mut self,
        catalog: &Catalog,
        kind: ComponentKind,
        d_row: i64,
        d_col: i64,
    ) -> Result<(), SessionError> {
        self.apply(catalog, Action::Nudge { kind, d_row, d_col })
    }

    fn require_assembled(&self, action: &'static str) -> Result<(), SessionError> {
        if self.status < Status::Assembled {
            return Err(SessionError::IllegalTransition {
                action,
                status: self.status,
            });
        }
        Ok(())
    }

    fn apply_inner(&mut self, catalog: &Catalog, action: &Action) -> Result<(), SessionError> {
        match action {
            Action::Describe { description } => {
                for kind in ComponentKind::ALL {
                    let q = description
                        .get(&kind)
                        .ok_or(SessionError::MissingKind(kind))?;
                    if q.kind != kind {
                        return Err(SessionError::KindMismatch {
                            key: kind,
                            query: q.kind,
                        });
                    }
                }
                self.warnings = description
                    .iter()
                    .map(|(k, q)| (*k, validate_params(*k, &q.desired).warnings))
                    .filter(|(_, w)| !w.is_empty())
                    .collect();
                self.candidates = description
                    .iter()
                    .map(|(k, q)| {
                        (
                            *k,
                            catalog
                                .match_query(q)
                                .iter()
                                .map(|r| r.id.clone())
                                .collect(),
                        )
                    })
                    .collect();
                self.description = description.clone();
                self.selections.clear();
                self.layout = None;
                self.offsets.clear();
                self.tune_config = None;
                self.stages.clear();
                self.status = Status::Selecting;
            }
            Action::Select { kind, record_id } => {
                if self.status != Status::Selecting {
                    return Err(SessionError::IllegalTransition {
                        action: "select",
                        status: self.status,
                    });
                }
                let listed = self
                    .candidates
                    .get(kind)
                    .is_some_and(|c| c.iter().any(|id| id == record_id));
                if !listed {
                    return Err(SessionError::NotACandidate {
                        kind: *kind,
                        record_id: record_id.clone(),
                    });
                }
                self.selections.insert(*kind, record_id.clone());
            }
            Action::Assemble => {
                if self.status < Status::Selecting {
                    return Err(SessionError::IllegalTransition {
                        action: "assemble",
                        status: self.status,
                    });
                }
                let face = self.selected(catalog, ComponentKind::FaceCutting)?;
                let threshold = otsu_threshold(&face.image).unwrap_or(FALLBACK_FACE_THRESHOLD);
                let anchor = find_ear_position(&binarize(&face.image, threshold))?;
                let mut dims = BTreeMap::new();
                for kind in ComponentKind::COMPOSITE_ORDER {
                    dims.insert(
                        kind,
                        ComponentDims::of(&self.selected(catalog, kind)?.image),
                    );
                }
                let layout = compute_layout(anchor, &dims)?;
                for p in layout.placements.values() {
                    p.check_inside(face.image.height(), face.image.width())?;
                }
                self.layout = Some(layout);
                self.offsets.clear();
                self.tune_config = None;
                self.render(catalog)?;
                self.status = Status::Assembled;
            }
            Action::Tune { config } => {
                self.require_assembled("tune")?;
                self.tune_config = Some(*config);
                self.render(catalog)?;
                self.status = Status::Tuned;
            }
            Action::Nudge { kind, d_row, d_col } => {
                self.require_assembled("nudge")?;
                if *kind == ComponentKind::FaceCutting {
                    return Err(SessionError::NotMovable(*kind));
                }
                let (h, w) = {
                    let face = self.selected(catalog, ComponentKind::FaceCutting)?;
                    (face.image.height(), face.image.width())
                };
                let base = self
                    .layout
                    .as_ref()
                    .and_then(|l| l.get(*kind))
                    .copied()
                    .ok_or(SessionError::MissingSelection(*kind))?;
                let (r0, c0) = self.offsets.get(kind).copied().unwrap_or((0, 0));
                let (dr, dc) = (r0 + d_row, c0 + d_col);
                base.shifted(dr, dc, h, w)?;
                self.offsets.insert(*kind, (dr, dc));
                self.render(catalog)?;
            }
        }
        Ok(())
    }

    fn selected<'c>(
        &self,
        catalog: &'c Catalog,
        kind: ComponentKind,
    ) -> Result<&'c ComponentRecord, SessionError> {
        let id = self
            .selections
            .get(&kind)
            .ok_or(SessionError::MissingSelection(kind))?;
        catalog
            .get(id)
            .ok_or_else(|| SessionError::MissingRecord(id.clone()))
    }

    /// Recomputes every stage from the pristine face cutting.
    fn render(&mut self, catalog: &Catalog) -> Result<(), SessionError> {
        let layout = self
            .effective_layout()
            .ok_or(SessionError::IllegalTransition {
                action: "render",
                status: self.status,
            })?;
        let face = &self.selected(catalog, ComponentKind::FaceCutting)?.image;
        let mut placed: Vec<(&ComponentRecord, Placement)> = Vec::new();
        for kind in ComponentKind::COMPOSITE_ORDER {
            let rec = self.selected(catalog, kind)?;
            let p = *layout
                .get(kind)
                .ok_or(SessionError::MissingSelection(kind))?;
            placed.push((rec, p));
        }

        let mut blind = face.clone();
        let mut masked = face.clone();
        for (rec, p) in &placed {
            blind = overlay_blind(&blind, &rec.image, p)?;
            masked = overlay_masked(&masked, &rec.image, &rec.effective_mask(), p)?;
        }
        let tuned = match &self.tune_config {
            Some(cfg) => {
                let mut tuned = face.clone();
                for (rec, p) in &placed {
                    tuned = tune_masked(&tuned, &rec.image, &rec.effective_mask(), p, cfg)?;
                }
                Some(tuned)
            }
            None => None,
        };

        self.stages.clear();
        self.stages.insert(Stage::Blind, blind);
        self.stages.insert(Stage::Masked, masked);
        if let Some(t) = tuned {
            self.stages.insert(Stage::Tuned, t);
        }
        Ok(())
    }
}
