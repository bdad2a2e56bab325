//! Batch operations behind the command-line front end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use photofit_core::catalog::{
    load_catalog, Catalog, CatalogError, ComponentKind, Query, MANIFEST_FILE,
};
use photofit_core::session::{Session, SessionError, Stage};
use photofit_core::synth::{demo_catalog, DEMO_SEED};
use photofit_core::tuning::TuneConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("no {0} in the catalog matches the description")]
    NoCandidates(ComponentKind),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Loads the catalog at `root`, or builds the seeded demo catalog when no
/// root is given.
pub fn open_catalog(root: Option<&Path>) -> Result<Catalog, CatalogError> {
    match root {
        Some(root) => load_catalog(root),
        None => Ok(demo_catalog(DEMO_SEED)),
    }
}

/// Loads the catalog at `root`, treating a directory without a manifest as
/// an empty catalog.
pub fn open_or_empty(root: &Path) -> Result<Catalog, CatalogError> {
    if root.join(MANIFEST_FILE).exists() {
        load_catalog(root)
    } else {
        Ok(Catalog::new())
    }
}

/// Runs the whole loop once, taking the best-ranked candidate for every kind.
pub fn generate(
    catalog: &Catalog,
    description: BTreeMap<ComponentKind, Query>,
    tune: Option<TuneConfig>,
) -> Result<Session, CommandError> {
    let mut session = Session::new("batch");
    session.submit_description(catalog, description)?;
    for kind in ComponentKind::ALL {
        let first = session.candidates()[&kind]
            .first()
            .cloned()
            .ok_or(CommandError::NoCandidates(kind))?;
        session.select_candidate(catalog, kind, &first)?;
    }
    session.assemble(catalog)?;
    if let Some(cfg) = tune {
        session.tune(catalog, cfg)?;
    }
    Ok(session)
}

/// Default output stage for a generated session.
pub fn final_stage(session: &Session) -> Stage {
    if session.stage(Stage::Tuned).is_ok() {
        Stage::Tuned
    } else {
        Stage::Masked
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".out.tmp".to_string());
    tmp.set_file_name(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
