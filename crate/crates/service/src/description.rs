//! Structured face descriptions as they arrive over HTTP or from a file.
//!
//! The wire form is a JSON object keyed by kind name, each value a map of
//! parameter name to desired value:
//!
//! ```json
//! { "Nose": { "Sharpness": "Normal" }, "Lip": {}, ... }
//! ```

use std::collections::BTreeMap;

use photofit_core::catalog::{CatalogError, ComponentKind, Params, Query};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DescriptionDoc(pub BTreeMap<String, Params>);

impl DescriptionDoc {
    /// Resolves kind names (leniently, so "Lips" and "face" are accepted).
    pub fn into_queries(self) -> Result<BTreeMap<ComponentKind, Query>, CatalogError> {
        let mut out = BTreeMap::new();
        for (name, desired) in self.0 {
            let kind: ComponentKind = name.parse()?;
            out.insert(kind, Query { kind, desired });
        }
        Ok(out)
    }

    pub fn from_queries(queries: &BTreeMap<ComponentKind, Query>) -> Self {
        Self(
            queries
                .iter()
                .map(|(k, q)| (k.as_str().to_string(), q.desired.clone()))
                .collect(),
        )
    }
}

/// Parses `name=value` pairs from the command line.
pub fn parse_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Params, String> {
    pairs
        .iter()
        .map(|p| {
            let p = p.as_ref();
            match p.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    Ok((k.trim().to_string(), v.trim().to_string()))
                }
                _ => Err(format!("expected name=value, got {p:?}")),
            }
        })
        .collect()
}
