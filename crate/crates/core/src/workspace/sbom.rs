//! SBOM emission and loading. The document is a deterministic JSON file at
//! the workspace root listing every pinned component with its name, version,
//! release, download path, and direct dependency names — enough to reproduce
//! the environment or update the installed packages.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ResolutionPlan, WorkspaceError};

pub const SBOM_FILE: &str = "sbom.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "ccenv".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbomComponent {
    pub name: String,
    pub version: String,
    pub release: String,
    /// Mirror-relative download path (the index `Filename` field).
    pub source_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    /// Direct dependency pin names.
    pub depends: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sbom {
    pub tool: ToolInfo,
    /// Snapshot date of the index the plan was resolved against (keeps the
    /// document reproducible — no wall-clock reads).
    pub created: String,
    pub root_package: String,
    pub release: String,
    pub components: Vec<SbomComponent>,
}

impl Sbom {
    /// Build the document from a closure-complete plan. Components mirror
    /// the pins exactly, in pin order.
    pub fn from_plan(plan: &ResolutionPlan, created: &str) -> Sbom {
        Sbom {
            tool: ToolInfo::default(),
            created: created.to_string(),
            root_package: plan.root_package.clone(),
            release: plan.target_release.clone(),
            components: plan
                .pins
                .iter()
                .map(|pin| SbomComponent {
                    name: pin.name.clone(),
                    version: pin.version.to_string(),
                    release: pin.release.clone(),
                    source_path: pin.mirror_path.clone(),
                    sha256: pin.sha256.clone(),
                    size: pin.size,
                    depends: pin.depends.clone(),
                })
                .collect(),
        }
    }

    /// Reconstruct a plan from the document (pins replayed; nothing
    /// unresolved by construction).
    pub fn to_plan(&self) -> Result<ResolutionPlan, WorkspaceError> {
        let mut pins = Vec::new();
        for c in &self.components {
            let version = c
                .version
                .parse()
                .map_err(|e| WorkspaceError::BadSbom {
                    reason: format!("component {}: bad version `{}`: {e}", c.name, c.version),
                })?;
            pins.push(super::Pin {
                name: c.name.clone(),
                version,
                release: c.release.clone(),
                mirror_path: c.source_path.clone(),
                sha256: c.sha256.clone(),
                size: c.size,
                depends: c.depends.clone(),
            });
        }
        Ok(ResolutionPlan {
            root_package: self.root_package.clone(),
            target_release: self.release.clone(),
            pins,
            unresolved: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("sbom serializes");
        text.push('\n');
        text
    }
}

/// Write the SBOM for `plan` to `path`. Field ordering and formatting are
/// fixed, so equal inputs produce byte-identical documents.
pub fn emit_sbom(plan: &ResolutionPlan, created: &str, path: &Path) -> Result<Sbom, WorkspaceError> {
    let sbom = Sbom::from_plan(plan, created);
    std::fs::write(path, sbom.to_json()).map_err(|source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sbom)
}

pub fn read_sbom(path: &Path) -> Result<Sbom, WorkspaceError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| WorkspaceError::BadSbom {
        reason: e.to_string(),
    })
}
