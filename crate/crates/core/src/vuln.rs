//! Vulnerability analytics: ingest CVE feeds, annotate the dependency graph
//! with vulnerable and fixed points (EDVGraph), and compute open/fixed
//! counts, fix lag, lifecycle-stage partitions, and transitive propagation.
//!
//! Ingestion is single-writer; everything downstream reads immutable
//! annotations and parallelizes per CVE or per release.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::EDGraph;
use crate::version::{compare, DebVersion};

#[derive(Debug, Error)]
pub enum VulnError {
    #[error("I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {message}")]
    BadJson { path: PathBuf, message: String },
    #[error("milestone table {path}: {message}")]
    BadMilestones { path: PathBuf, message: String },
    #[error("unknown release `{0}` in graph")]
    UnknownRelease(String),
}

/// Severity derived from the tracker's urgency field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Unassigned,
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn from_urgency(urgency: Option<&str>) -> Self {
        let Some(u) = urgency else {
            return Severity::Unassigned;
        };
        let u = u.trim().to_ascii_lowercase();
        if u.starts_with("high") {
            Severity::High
        } else if u.starts_with("medium") {
            Severity::Medium
        } else if u.starts_with("low") {
            Severity::Low
        } else {
            // "not yet assigned", "unimportant", "end-of-life", ...
            Severity::Unassigned
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::High => "HIGH",
            Severity::Medium => "MEDIUM",
            Severity::Low => "LOW",
            Severity::Unassigned => "UNASSIGNED",
        }
    }

    pub const ALL: [Severity; 4] = [
        Severity::High,
        Severity::Medium,
        Severity::Low,
        Severity::Unassigned,
    ];
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-release resolution state of a CVE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReleaseStatus {
    Open,
    Fixed(DebVersion),
}

impl ReleaseStatus {
    pub fn is_fixed(&self) -> bool {
        matches!(self, ReleaseStatus::Fixed(_))
    }
}

/// One normalized CVE.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CveRecord {
    pub id: String,
    pub published: Option<NaiveDate>,
    pub severity: Severity,
    /// Project (source package) the CVE is filed against.
    pub source_project: String,
    pub releases: BTreeMap<String, ReleaseStatus>,
}

/// `CVE-\d{4}-\d{4,}`
pub fn valid_cve_id(id: &str) -> bool {
    let Some(rest) = id.strip_prefix("CVE-") else {
        return false;
    };
    let Some((year, num)) = rest.split_once('-') else {
        return false;
    };
    year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && num.len() >= 4
        && num.bytes().all(|b| b.is_ascii_digit())
}

/// Result of an ingestion pass.
#[derive(Debug, Default)]
pub struct Ingest {
    pub records: Vec<CveRecord>,
    pub diagnostics: Vec<String>,
}

/// Parse a security-tracker style feed: an object keyed by source project,
/// each value an object keyed by CVE id, each carrying a `releases` map of
/// `{status, fixed_version?, urgency?}`. Malformed entries are skipped with
/// diagnostics; the record severity is the highest urgency seen across its
/// release entries. Publish dates are not part of this shape — see
/// [`apply_publish_dates`].
pub fn ingest_cves(feed_json: &str) -> Result<Ingest, VulnError> {
    let root: serde_json::Value =
        serde_json::from_str(feed_json).map_err(|e| VulnError::BadJson {
            path: PathBuf::from("<feed>"),
            message: e.to_string(),
        })?;
    let Some(projects) = root.as_object() else {
        return Err(VulnError::BadJson {
            path: PathBuf::from("<feed>"),
            message: "top level is not an object".to_string(),
        });
    };
    let mut out = Ingest::default();
    for (project, cves) in projects {
        let Some(cves) = cves.as_object() else {
            out.diagnostics
                .push(format!("{project}: entry is not an object, skipped"));
            continue;
        };
        for (cve_id, body) in cves {
            if !valid_cve_id(cve_id) {
                out.diagnostics
                    .push(format!("{project}: `{cve_id}` is not a CVE id, skipped"));
                continue;
            }
            let mut record = CveRecord {
                id: cve_id.clone(),
                published: None,
                severity: Severity::Unassigned,
                source_project: project.clone(),
                releases: BTreeMap::new(),
            };
            let releases = body.get("releases").and_then(|r| r.as_object());
            let Some(releases) = releases else {
                out.diagnostics
                    .push(format!("{cve_id}: no releases map, skipped"));
                continue;
            };
            for (release, entry) in releases {
                let status = entry.get("status").and_then(|s| s.as_str()).unwrap_or("");
                let urgency = entry.get("urgency").and_then(|u| u.as_str());
                record.severity = record.severity.max(Severity::from_urgency(urgency));
                match status {
                    "open" => {
                        record.releases.insert(release.clone(), ReleaseStatus::Open);
                    }
                    "resolved" => {
                        let Some(fv) = entry.get("fixed_version").and_then(|v| v.as_str()) else {
                            out.diagnostics.push(format!(
                                "{cve_id}/{release}: resolved without fixed_version, entry skipped"
                            ));
                            continue;
                        };
                        match fv.parse::<DebVersion>() {
                            Ok(v) => {
                                record
                                    .releases
                                    .insert(release.clone(), ReleaseStatus::Fixed(v));
                            }
                            Err(e) => out.diagnostics.push(format!(
                                "{cve_id}/{release}: bad fixed_version `{fv}`: {e}, entry skipped"
                            )),
                        }
                    }
                    other => out.diagnostics.push(format!(
                        "{cve_id}/{release}: unknown status `{other}`, entry skipped"
                    )),
                }
            }
            if record.releases.is_empty() {
                out.diagnostics
                    .push(format!("{cve_id}: no usable release entries, skipped"));
                continue;
            }
            out.records.push(record);
        }
    }
    out.records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// The per-CVE file shape: one JSON document per CVE.
#[derive(Debug, Deserialize)]
struct VulnListFile {
    #[serde(rename = "ID")]
    id: String,
    #[serde(rename = "Project")]
    project: String,
    #[serde(rename = "Published")]
    published: Option<String>,
    #[serde(rename = "Urgency")]
    urgency: Option<String>,
    #[serde(rename = "Releases")]
    releases: BTreeMap<String, VulnListRelease>,
}

#[derive(Debug, Deserialize)]
struct VulnListRelease {
    #[serde(rename = "Status")]
    status: String,
    #[serde(rename = "FixedVersion")]
    fixed_version: Option<String>,
}

/// Ingest a directory of per-CVE JSON files (`CVE-*.json`), sorted by file
/// name. Files that fail to parse are skipped with a diagnostic.
pub fn ingest_vuln_list(dir: &Path) -> Result<Ingest, VulnError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| VulnError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Ingest::default();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|source| VulnError::Io {
            path: path.clone(),
            source,
        })?;
        let file: VulnListFile = match serde_json::from_str(&text) {
            Ok(f) => f,
            Err(e) => {
                out.diagnostics
                    .push(format!("{}: {e}, skipped", path.display()));
                continue;
            }
        };
        if !valid_cve_id(&file.id) {
            out.diagnostics
                .push(format!("{}: `{}` is not a CVE id, skipped", path.display(), file.id));
            continue;
        }
        let published = match &file.published {
            Some(p) => match NaiveDate::parse_from_str(p, "%Y-%m-%d") {
                Ok(d) => Some(d),
                Err(_) => {
                    out.diagnostics
                        .push(format!("{}: bad Published date `{p}`, ignored", path.display()));
                    None
                }
            },
            None => None,
        };
        let mut record = CveRecord {
            id: file.id.clone(),
            published,
            severity: Severity::from_urgency(file.urgency.as_deref()),
            source_project: file.project.clone(),
            releases: BTreeMap::new(),
        };
        for (release, entry) in &file.releases {
            match entry.status.as_str() {
                "open" => {
                    record.releases.insert(release.clone(), ReleaseStatus::Open);
                }
                "resolved" => match entry.fixed_version.as_deref().map(str::parse) {
                    Some(Ok(v)) => {
                        record
                            .releases
                            .insert(release.clone(), ReleaseStatus::Fixed(v));
                    }
                    Some(Err(e)) => out.diagnostics.push(format!(
                        "{}/{release}: bad FixedVersion: {e}, entry skipped",
                        file.id
                    )),
                    None => out.diagnostics.push(format!(
                        "{}/{release}: resolved without FixedVersion, entry skipped",
                        file.id
                    )),
                },
                other => out.diagnostics.push(format!(
                    "{}/{release}: unknown Status `{other}`, entry skipped",
                    file.id
                )),
            }
        }
        if record.releases.is_empty() {
            out.diagnostics
                .push(format!("{}: no usable release entries, skipped", file.id));
            continue;
        }
        out.records.push(record);
    }
    out.records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Load a `{"CVE-...": "YYYY-MM-DD"}` publish-date lookup table.
pub fn load_publish_dates(path: &Path) -> Result<BTreeMap<String, NaiveDate>, VulnError> {
    let text = std::fs::read_to_string(path).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| VulnError::BadJson {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut out = BTreeMap::new();
    for (id, date) in raw {
        let parsed = NaiveDate::parse_from_str(&date, "%Y-%m-%d").map_err(|e| {
            VulnError::BadJson {
                path: path.to_path_buf(),
                message: format!("{id}: bad date `{date}`: {e}"),
            }
        })?;
        out.insert(id, parsed);
    }
    Ok(out)
}

/// Fill missing publish dates from a lookup table. Existing dates win.
pub fn apply_publish_dates(records: &mut [CveRecord], table: &BTreeMap<String, NaiveDate>) {
    for rec in records {
        if rec.published.is_none() {
            rec.published = table.get(&rec.id).copied();
        }
    }
}

/// Kind of a vulnerability annotation on a package node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum AnnotationKind {
    VulnerablePoint,
    FixedPoint,
}

/// One CVE ↔ package-node association.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct VulnAnnotation {
    pub cve: String,
    pub release: String,
    pub project: String,
    pub package: String,
    pub version: String,
    pub kind: AnnotationKind,
}

/// The annotation layer over an EDGraph (the "EDVGraph").
#[derive(Debug, Default)]
pub struct VulnAnnotations {
    pub annotations: Vec<VulnAnnotation>,
    /// Ingested records by id, for status/severity lookups downstream.
    pub records: BTreeMap<String, CveRecord>,
    /// CVE ids that matched nothing in the graph.
    pub unmatched: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl VulnAnnotations {
    /// Annotations of one release.
    pub fn for_release<'a>(&'a self, release: &'a str) -> impl Iterator<Item = &'a VulnAnnotation> {
        self.annotations.iter().filter(move |a| a.release == release)
    }

    /// A filtered copy keeping only CVEs whose status for `release` matches
    /// `fixed` (true → FIXED, false → OPEN). Used for per-status report rows.
    pub fn restrict_to_status(&self, release: &str, fixed: bool) -> VulnAnnotations {
        let keep: BTreeSet<&String> = self
            .records
            .iter()
            .filter(|(_, r)| {
                r.releases
                    .get(release)
                    .is_some_and(|s| s.is_fixed() == fixed)
            })
            .map(|(id, _)| id)
            .collect();
        VulnAnnotations {
            annotations: self
                .annotations
                .iter()
                .filter(|a| keep.contains(&a.cve))
                .cloned()
                .collect(),
            records: self
                .records
                .iter()
                .filter(|(id, _)| keep.contains(id))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            unmatched: Vec::new(),
            diagnostics: Vec::new(),
        }
    }
}

fn annotate_one(graph: &EDGraph, rec: &CveRecord) -> (Vec<VulnAnnotation>, Vec<String>) {
    let mut annotations = Vec::new();
    let mut diagnostics = Vec::new();
    for (release, status) in &rec.releases {
        let Some(rg) = graph.releases.get(release) else {
            continue; // feed covers more releases than the corpus
        };
        let Some(project) = rg.projects.get(&rec.source_project) else {
            diagnostics.push(format!(
                "{}: project `{}` absent from release {}",
                rec.id, rec.source_project, release
            ));
            continue;
        };
        for pkg in &project.packages {
            for node in rg.nodes_of_name(pkg) {
                let kind = match status {
                    ReleaseStatus::Open => Some(AnnotationKind::VulnerablePoint),
                    ReleaseStatus::Fixed(fv) => match compare(&node.version, fv) {
                        std::cmp::Ordering::Less => Some(AnnotationKind::VulnerablePoint),
                        std::cmp::Ordering::Equal => Some(AnnotationKind::FixedPoint),
                        std::cmp::Ordering::Greater => None,
                    },
                };
                if let Some(kind) = kind {
                    annotations.push(VulnAnnotation {
                        cve: rec.id.clone(),
                        release: release.clone(),
                        project: rec.source_project.clone(),
                        package: pkg.clone(),
                        version: node.version.to_string(),
                        kind,
                    });
                }
            }
        }
    }
    (annotations, diagnostics)
}

fn merge_annotations(
    graph_records: Vec<&CveRecord>,
    results: Vec<(Vec<VulnAnnotation>, Vec<String>)>,
) -> VulnAnnotations {
    let mut out = VulnAnnotations::default();
    for (rec, (annotations, diagnostics)) in graph_records.into_iter().zip(results) {
        if annotations.is_empty() {
            out.unmatched.push(rec.id.clone());
        }
        out.annotations.extend(annotations);
        out.diagnostics.extend(diagnostics);
        out.records.insert(rec.id.clone(), rec.clone());
    }
    out.annotations.sort();
    out.unmatched.sort();
    out
}

/// Attribute every CVE to the package nodes of its source project: versions
/// strictly before the fix are vulnerable points, the fix version (when
/// observed) is a fixed point, and OPEN CVEs mark every observed version
/// vulnerable. CVEs matching no node are reported in `unmatched`.
pub fn annotate_graph(graph: &EDGraph, records: &[CveRecord]) -> VulnAnnotations {
    let refs: Vec<&CveRecord> = records.iter().collect();
    #[cfg(feature = "parallel")]
    let results: Vec<(Vec<VulnAnnotation>, Vec<String>)> = {
        use rayon::prelude::*;
        refs.par_iter().map(|r| annotate_one(graph, r)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Vec<VulnAnnotation>, Vec<String>)> =
        refs.iter().map(|r| annotate_one(graph, r)).collect();
    merge_annotations(refs, results)
}

/// Sequential twin of [`annotate_graph`].
pub fn annotate_graph_seq(graph: &EDGraph, records: &[CveRecord]) -> VulnAnnotations {
    let refs: Vec<&CveRecord> = records.iter().collect();
    let results: Vec<(Vec<VulnAnnotation>, Vec<String>)> =
        refs.iter().map(|r| annotate_one(graph, r)).collect();
    merge_annotations(refs, results)
}

/// Distinct CVE ids with at least one annotation in `release`, split by that
/// release's status: `(open, fixed)`.
pub fn open_fixed_counts(annotations: &VulnAnnotations, release: &str) -> (usize, usize) {
    let mut open = BTreeSet::new();
    let mut fixed = BTreeSet::new();
    for ann in annotations.for_release(release) {
        let Some(rec) = annotations.records.get(&ann.cve) else {
            continue;
        };
        match rec.releases.get(release) {
            Some(ReleaseStatus::Open) => {
                open.insert(&ann.cve);
            }
            Some(ReleaseStatus::Fixed(_)) => {
                fixed.insert(&ann.cve);
            }
            None => {}
        }
    }
    (open.len(), fixed.len())
}

/// Outcome of a fix-lag computation for one (CVE, release).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixLag {
    /// Days from NVD publication to the fixed version's first appearance (≥0).
    Days(i64),
    /// The fix appeared before the CVE was published.
    FixedBeforePublication,
    NotComputable(NotComputableReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NotComputableReason {
    NotFixedForRelease,
    NoPublishDate,
    FixedPointNotInGraph,
}

/// Lag between publication and the first sampled appearance of the fixed
/// version. Quantized to the daily sampling grid (±1 day).
pub fn fix_lag(cve: &CveRecord, graph: &EDGraph, release: &str) -> FixLag {
    let Some(ReleaseStatus::Fixed(fixed_version)) = cve.releases.get(release) else {
        return FixLag::NotComputable(NotComputableReason::NotFixedForRelease);
    };
    let Some(published) = cve.published else {
        return FixLag::NotComputable(NotComputableReason::NoPublishDate);
    };
    let Some(rg) = graph.releases.get(release) else {
        return FixLag::NotComputable(NotComputableReason::FixedPointNotInGraph);
    };
    let Some(project) = rg.projects.get(&cve.source_project) else {
        return FixLag::NotComputable(NotComputableReason::FixedPointNotInGraph);
    };
    let uploaded = project
        .packages
        .iter()
        .flat_map(|pkg| rg.nodes_of_name(pkg))
        .filter(|node| compare(&node.version, fixed_version) == std::cmp::Ordering::Equal)
        .map(|node| node.first_seen())
        .min();
    let Some(uploaded) = uploaded else {
        return FixLag::NotComputable(NotComputableReason::FixedPointNotInGraph);
    };
    let days = (uploaded - published).num_days();
    if days < 0 {
        FixLag::FixedBeforePublication
    } else {
        FixLag::Days(days)
    }
}

/// Release lifecycle stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stage {
    Development,
    FormalLife,
    Lts,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Development => "development",
            Stage::FormalLife => "formal_life",
            Stage::Lts => "lts",
        }
    }
}

/// Milestone dates of one release. The release day itself starts formal
/// life; `eol` starts LTS; `eol_lts` ends the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseMilestones {
    pub released: NaiveDate,
    pub eol: NaiveDate,
    pub eol_lts: NaiveDate,
}

impl ReleaseMilestones {
    /// Stage containing `date`, or `None` when the date falls after the LTS
    /// window ends.
    pub fn stage_of(&self, date: NaiveDate) -> Option<Stage> {
        if date < self.released {
            Some(Stage::Development)
        } else if date < self.eol {
            Some(Stage::FormalLife)
        } else if date < self.eol_lts {
            Some(Stage::Lts)
        } else {
            None
        }
    }
}

pub type MilestoneTable = BTreeMap<String, ReleaseMilestones>;

/// Load the checked-in milestone table (TOML: one section per release with
/// `released`, `eol`, `eol_lts` dates). Validates `released < eol < eol_lts`.
pub fn load_milestones(path: &Path) -> Result<MilestoneTable, VulnError> {
    #[derive(Deserialize)]
    struct RawMilestones {
        released: String,
        eol: String,
        eol_lts: String,
    }
    let text = std::fs::read_to_string(path).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: BTreeMap<String, RawMilestones> =
        toml::from_str(&text).map_err(|e| VulnError::BadMilestones {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut out = MilestoneTable::new();
    for (release, m) in raw {
        let parse = |field: &str, value: &str| {
            NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|e| VulnError::BadMilestones {
                path: path.to_path_buf(),
                message: format!("{release}.{field}: bad date `{value}`: {e}"),
            })
        };
        let ms = ReleaseMilestones {
            released: parse("released", &m.released)?,
            eol: parse("eol", &m.eol)?,
            eol_lts: parse("eol_lts", &m.eol_lts)?,
        };
        if !(ms.released < ms.eol && ms.eol < ms.eol_lts) {
            return Err(VulnError::BadMilestones {
                path: path.to_path_buf(),
                message: format!("{release}: dates must satisfy released < eol < eol_lts"),
            });
        }
        out.insert(release, ms);
    }
    Ok(out)
}

/// Dated items split by lifecycle stage, with an explicit diagnostic bucket
/// for items outside the timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePartition<T> {
    pub development: Vec<T>,
    pub formal_life: Vec<T>,
    pub lts: Vec<T>,
    pub outside: Vec<(NaiveDate, T)>,
}

impl<T> Default for StagePartition<T> {
    fn default() -> Self {
        StagePartition {
            development: Vec::new(),
            formal_life: Vec::new(),
            lts: Vec::new(),
            outside: Vec::new(),
        }
    }
}

/// Assign each dated item to exactly one stage of the release timeline.
pub fn stage_partition<T>(
    items: impl IntoIterator<Item = (NaiveDate, T)>,
    milestones: &ReleaseMilestones,
) -> StagePartition<T> {
    let mut out = StagePartition::default();
    for (date, item) in items {
        match milestones.stage_of(date) {
            Some(Stage::Development) => out.development.push(item),
            Some(Stage::FormalLife) => out.formal_life.push(item),
            Some(Stage::Lts) => out.lts.push(item),
            None => out.outside.push((date, item)),
        }
    }
    out
}

/// Projects affected by vulnerabilities in one release: the projects that
/// introduce CVEs and the projects exposed purely through (transitive)
/// dependencies, reported disjointly.
#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub release: String,
    pub original: BTreeSet<String>,
    /// Affected via dependency closure only — disjoint from `original`.
    pub transitive_only: BTreeSet<String>,
    pub total_projects: usize,
}

impl PropagationReport {
    pub fn union_count(&self) -> usize {
        self.original.len() + self.transitive_only.len()
    }

    pub fn pct_original(&self) -> f64 {
        percentage(self.original.len(), self.total_projects)
    }

    pub fn pct_transitive_only(&self) -> f64 {
        percentage(self.transitive_only.len(), self.total_projects)
    }

    pub fn pct_union(&self) -> f64 {
        percentage(self.union_count(), self.total_projects)
    }
}

fn percentage(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Compute the original/transitive split for one release. `severity` filters
/// the contributing CVEs; pass a pre-filtered annotation set (see
/// [`VulnAnnotations::restrict_to_status`]) for per-status rows.
pub fn propagation(
    graph: &EDGraph,
    annotations: &VulnAnnotations,
    release: &str,
    severity: Option<Severity>,
) -> Result<PropagationReport, VulnError> {
    let rg = graph
        .releases
        .get(release)
        .ok_or_else(|| VulnError::UnknownRelease(release.to_string()))?;
    let mut original = BTreeSet::new();
    for ann in annotations.for_release(release) {
        if ann.kind != AnnotationKind::VulnerablePoint {
            continue;
        }
        if let Some(sev) = severity {
            let Some(rec) = annotations.records.get(&ann.cve) else {
                continue;
            };
            if rec.severity != sev {
                continue;
            }
        }
        original.insert(ann.project.clone());
    }
    // Multi-source reverse BFS over project-level dependency edges.
    let mut affected: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<&str> = original.iter().map(|s| s.as_str()).collect();
    let mut seen: BTreeSet<&str> = original.iter().map(|s| s.as_str()).collect();
    let rdeps = rg.project_reverse_dependencies();
    while let Some(current) = queue.pop_front() {
        for next in rdeps.get(current).into_iter().flatten() {
            if seen.insert(next) {
                affected.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    let transitive_only: BTreeSet<String> = affected.difference(&original).cloned().collect();
    Ok(PropagationReport {
        release: release.to_string(),
        original,
        transitive_only,
        total_projects: rg.projects.len(),
    })
}

/// Per-release fix-lag aggregation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LagReport {
    pub release: String,
    /// (cve, days, stage of the fix upload date) for non-negative lags.
    pub lagged: Vec<(String, i64, Option<Stage>)>,
    pub fixed_before_publication: Vec<String>,
    pub not_computable: Vec<(String, NotComputableReason)>,
}

impl LagReport {
    pub fn mean_lag_days(&self) -> Option<f64> {
        if self.lagged.is_empty() {
            return None;
        }
        let sum: i64 = self.lagged.iter().map(|(_, d, _)| d).sum();
        Some(sum as f64 / self.lagged.len() as f64)
    }

    pub fn mean_lag_for_stage(&self, stage: Stage) -> Option<f64> {
        let days: Vec<i64> = self
            .lagged
            .iter()
            .filter(|(_, _, s)| *s == Some(stage))
            .map(|(_, d, _)| *d)
            .collect();
        if days.is_empty() {
            return None;
        }
        Some(days.iter().sum::<i64>() as f64 / days.len() as f64)
    }

    pub fn stage_count(&self, stage: Stage) -> usize {
        self.lagged.iter().filter(|(_, _, s)| *s == Some(stage)).count()
    }
}

/// Compute fix lag for every CVE fixed in `release`, staging each fix by its
/// upload date when a milestone table entry exists.
pub fn fix_lag_report(
    graph: &EDGraph,
    annotations: &VulnAnnotations,
    release: &str,
    milestones: Option<&ReleaseMilestones>,
) -> LagReport {
    let mut report = LagReport {
        release: release.to_string(),
        ..LagReport::default()
    };
    for (id, rec) in &annotations.records {
        let Some(status) = rec.releases.get(release) else {
            continue;
        };
        if !status.is_fixed() {
            continue;
        }
        match fix_lag(rec, graph, release) {
            FixLag::Days(days) => {
                let stage = milestones.and_then(|ms| {
                    let published = rec.published.expect("Days implies a publish date");
                    let uploaded = published + chrono::Duration::days(days);
                    ms.stage_of(uploaded)
                });
                report.lagged.push((id.clone(), days, stage));
            }
            FixLag::FixedBeforePublication => report.fixed_before_publication.push(id.clone()),
            FixLag::NotComputable(reason) => report.not_computable.push((id.clone(), reason)),
        }
    }
    report
}

/// Write the Table V shape: one row per release with open/fixed CVE counts.
pub fn write_open_fixed_csv(
    annotations: &VulnAnnotations,
    releases: &[String],
    path: &Path,
) -> Result<(), VulnError> {
    let mut out = String::from("release,open,fixed\n");
    for release in releases {
        let (open, fixed) = open_fixed_counts(annotations, release);
        out.push_str(&format!("{release},{open},{fixed}\n"));
    }
    std::fs::write(path, out).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the Table VI shape: per release and CVE status, the project counts
/// of the original / transitive-only / union sets with percentages.
pub fn write_propagation_by_status_csv(
    graph: &EDGraph,
    annotations: &VulnAnnotations,
    releases: &[String],
    path: &Path,
) -> Result<(), VulnError> {
    let mut out = String::from(
        "release,status,original,transitive_only,union,total_projects,pct_original,pct_transitive_only,pct_union\n",
    );
    for release in releases {
        for (label, fixed) in [("open", false), ("fixed", true)] {
            let restricted = annotations.restrict_to_status(release, fixed);
            let report = propagation(graph, &restricted, release, None)?;
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.2},{:.2},{:.2}\n",
                release,
                label,
                report.original.len(),
                report.transitive_only.len(),
                report.union_count(),
                report.total_projects,
                report.pct_original(),
                report.pct_transitive_only(),
                report.pct_union(),
            ));
        }
    }
    std::fs::write(path, out).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the Table VII shape: per release and severity, original /
/// transitive-only / union project counts with percentages.
pub fn write_propagation_by_severity_csv(
    graph: &EDGraph,
    annotations: &VulnAnnotations,
    releases: &[String],
    path: &Path,
) -> Result<(), VulnError> {
    let mut out = String::from(
        "release,severity,original,transitive_only,union,total_projects,pct_original,pct_transitive_only,pct_union\n",
    );
    for release in releases {
        for severity in Severity::ALL {
            let report = propagation(graph, annotations, release, Some(severity))?;
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.2},{:.2},{:.2}\n",
                release,
                severity,
                report.original.len(),
                report.transitive_only.len(),
                report.union_count(),
                report.total_projects,
                report.pct_original(),
                report.pct_transitive_only(),
                report.pct_union(),
            ));
        }
    }
    std::fs::write(path, out).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the Table VIII shape: per release, fixed-CVE counts and mean lag by
/// lifecycle stage, plus fixed-before-publication and not-computable tallies.
pub fn write_lag_csv(
    graph: &EDGraph,
    annotations: &VulnAnnotations,
    releases: &[String],
    milestones: &MilestoneTable,
    path: &Path,
) -> Result<(), VulnError> {
    let fmt_mean = |m: Option<f64>| m.map(|v| format!("{v:.1}")).unwrap_or_default();
    let mut out = String::from(
        "release,development_fixes,development_mean_lag,formal_life_fixes,formal_life_mean_lag,lts_fixes,lts_mean_lag,overall_mean_lag,fixed_before_publication,not_computable\n",
    );
    for release in releases {
        let report = fix_lag_report(graph, annotations, release, milestones.get(release.as_str()));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            release,
            report.stage_count(Stage::Development),
            fmt_mean(report.mean_lag_for_stage(Stage::Development)),
            report.stage_count(Stage::FormalLife),
            fmt_mean(report.mean_lag_for_stage(Stage::FormalLife)),
            report.stage_count(Stage::Lts),
            fmt_mean(report.mean_lag_for_stage(Stage::Lts)),
            fmt_mean(report.mean_lag_days()),
            report.fixed_before_publication.len(),
            report.not_computable.len(),
        ));
    }
    std::fs::write(path, out).map_err(|source| VulnError::Io {
        path: path.to_path_buf(),
        source,
    })
}
