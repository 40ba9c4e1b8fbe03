//! The evolutionary dependency graph (EDGraph): package and project nodes
//! with temporal extents built from a series of dated snapshots, dependency
//! edges at both levels, update events, and transitive closures.
//!
//! Construction is single-writer and sequential; the finished graph is
//! immutable and safe to share across threads for concurrent analytics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{DependencyClause, PackageRecord};
use crate::snapshot::MirrorSnapshot;
use crate::version::{compare, Constraint, DebVersion};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown release `{0}`")]
    UnknownRelease(String),
    #[error("unknown {level} node `{name}` in release `{release}`")]
    UnknownNode {
        release: String,
        name: String,
        level: GraphLevel,
    },
    #[error("no snapshots supplied")]
    Empty,
    #[error("I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("bad row in {path}: {message}")]
    BadRow { path: PathBuf, message: String },
}

/// Whether an operation works on package-name nodes or project nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphLevel {
    Package,
    Project,
}

impl fmt::Display for GraphLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphLevel::Package => "package",
            GraphLevel::Project => "project",
        })
    }
}

/// One `(name, version)` of one release, with the exact set of sampled dates
/// on which it was observed. `first_seen`/`last_seen` are the extent of that
/// set; the set itself is kept because a version can in principle disappear
/// and reappear between samples.
#[derive(Debug, Clone)]
pub struct PackageNode {
    pub release: String,
    pub name: String,
    pub version: DebVersion,
    /// Project this package belongs to (Source base name or own name).
    pub project: String,
    presence: BTreeSet<NaiveDate>,
    /// The most recently sampled record for this (name, version).
    pub record: PackageRecord,
}

impl PackageNode {
    pub fn first_seen(&self) -> NaiveDate {
        *self.presence.iter().next().expect("non-empty presence")
    }

    pub fn last_seen(&self) -> NaiveDate {
        *self.presence.iter().next_back().expect("non-empty presence")
    }

    pub fn presence(&self) -> &BTreeSet<NaiveDate> {
        &self.presence
    }

    pub fn present_on(&self, date: NaiveDate) -> bool {
        self.presence.contains(&date)
    }

    /// Stable composite id used in exports: `p:<release>:<name>:<version>`.
    pub fn id(&self) -> String {
        format!("p:{}:{}:{}", self.release, self.name, self.version)
    }
}

/// A project (source) node aggregating its binary packages within a release.
#[derive(Debug, Clone)]
pub struct ProjectNode {
    pub release: String,
    pub name: String,
    pub packages: BTreeSet<String>,
    pub first_seen: NaiveDate,
    pub last_seen: NaiveDate,
}

impl ProjectNode {
    /// Stable composite id used in exports: `P:<release>:<name>`.
    pub fn id(&self) -> String {
        format!("P:{}:{}", self.release, self.name)
    }
}

/// An un-resolved dependency edge: a package node requires `target` (a
/// package name, possibly virtual or absent) under an optional constraint.
/// `clause_id` ties alternatives of one clause together: `d<i>` for the i-th
/// `Depends` clause, `p<i>` for `Pre-Depends`.
#[derive(Debug, Clone)]
pub struct PackageEdge {
    pub src: usize,
    pub target: String,
    pub clause_id: String,
    pub constraint: Option<Constraint>,
    /// True when the target name is neither a real package nor provided by
    /// one anywhere in this release's sampled window.
    pub dangling: bool,
}

/// A package or project version change observed between two sampled dates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateEvent {
    pub release: String,
    pub level: GraphLevel,
    pub name: String,
    pub old_version: DebVersion,
    pub new_version: DebVersion,
    /// The sampled date on which the new version was first observed.
    pub date: NaiveDate,
}

/// Per-field difference between two versions read as MAJOR.MINOR.PATCH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SemverSpan {
    pub d_major: i64,
    pub d_minor: i64,
    pub d_patch: i64,
    /// Set when either endpoint's upstream does not start with a numeric
    /// segment; such spans are excluded from averages.
    pub non_semver: bool,
}

/// All nodes and edges of one release.
#[derive(Debug, Default)]
pub struct ReleaseGraph {
    pub release: String,
    /// Sorted sampled dates.
    pub dates: Vec<NaiveDate>,
    nodes: Vec<PackageNode>,
    /// `(name, rendered version)` → node index.
    node_index: BTreeMap<(String, String), usize>,
    by_name: BTreeMap<String, Vec<usize>>,
    pub projects: BTreeMap<String, ProjectNode>,
    pub edges: Vec<PackageEdge>,
    /// Project-level edges: exactly the lift of non-dangling package edges,
    /// self-edges dropped.
    pub project_edges: BTreeSet<(String, String)>,
    /// Name-level adjacency (dependency direction), only between names that
    /// exist as real packages in this release.
    name_deps: BTreeMap<String, BTreeSet<String>>,
    name_rdeps: BTreeMap<String, BTreeSet<String>>,
    project_deps: BTreeMap<String, BTreeSet<String>>,
    project_rdeps: BTreeMap<String, BTreeSet<String>>,
    /// Virtual name → providing package names (any date).
    providers: BTreeMap<String, BTreeSet<String>>,
}

impl ReleaseGraph {
    pub fn nodes(&self) -> &[PackageNode] {
        &self.nodes
    }

    pub fn node(&self, name: &str, version: &DebVersion) -> Option<&PackageNode> {
        self.node_index
            .get(&(name.to_string(), version.to_string()))
            .map(|&i| &self.nodes[i])
    }

    /// All version nodes of one package name, in version order.
    pub fn nodes_of_name(&self, name: &str) -> Vec<&PackageNode> {
        let mut v: Vec<&PackageNode> = self
            .by_name
            .get(name)
            .map(|idxs| idxs.iter().map(|&i| &self.nodes[i]).collect())
            .unwrap_or_default();
        v.sort_by(|a, b| compare(&a.version, &b.version));
        v
    }

    pub fn has_package(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn providers_of(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.providers.get(name)
    }

    /// The version of `name` present on `date`, if any. When several versions
    /// of one name appear on the same sampled date (malformed mirror), the
    /// highest wins.
    pub fn version_on(&self, name: &str, date: NaiveDate) -> Option<&DebVersion> {
        self.by_name.get(name).and_then(|idxs| {
            idxs.iter()
                .map(|&i| &self.nodes[i])
                .filter(|n| n.present_on(date))
                .map(|n| &n.version)
                .max_by(|a, b| compare(a, b))
        })
    }

    /// Project-level reverse adjacency: project → projects depending on it.
    pub fn project_reverse_dependencies(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.project_rdeps
    }

    fn adjacency(&self, level: GraphLevel, reverse: bool) -> &BTreeMap<String, BTreeSet<String>> {
        match (level, reverse) {
            (GraphLevel::Package, false) => &self.name_deps,
            (GraphLevel::Package, true) => &self.name_rdeps,
            (GraphLevel::Project, false) => &self.project_deps,
            (GraphLevel::Project, true) => &self.project_rdeps,
        }
    }

    fn contains_name(&self, level: GraphLevel, name: &str) -> bool {
        match level {
            GraphLevel::Package => self.by_name.contains_key(name),
            GraphLevel::Project => self.projects.contains_key(name),
        }
    }
}

/// The full multi-release evolutionary dependency graph.
#[derive(Debug, Default)]
pub struct EDGraph {
    pub releases: BTreeMap<String, ReleaseGraph>,
    /// Human-readable construction diagnostics (dangling targets etc.).
    pub diagnostics: Vec<String>,
}

/// The project a record belongs to: the `Source` base name when present
/// (parenthesized version already stripped at parse time), else the package
/// name. Versioned package names are deliberately not merged into any base
/// project beyond what `Source` states.
pub fn project_of(record: &PackageRecord) -> &str {
    record.source_or_name()
}

/// Build the graph from dated snapshots. The input is grouped by release and
/// processed in date order; it need not arrive sorted. Dangling dependency
/// targets are flagged on the edge and reported in `diagnostics`.
pub fn build_graph(snapshots: &[MirrorSnapshot]) -> Result<EDGraph, GraphError> {
    if snapshots.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut order: Vec<&MirrorSnapshot> = snapshots.iter().collect();
    order.sort_by(|a, b| a.key.cmp(&b.key));

    let mut graph = EDGraph::default();
    for snap in order {
        let rg = graph
            .releases
            .entry(snap.key.release.clone())
            .or_insert_with(|| ReleaseGraph {
                release: snap.key.release.clone(),
                ..ReleaseGraph::default()
            });
        if rg.dates.last() != Some(&snap.key.date) {
            rg.dates.push(snap.key.date);
        }
        for rec in &snap.records {
            let key = (rec.name.clone(), rec.version.to_string());
            let idx = match rg.node_index.get(&key) {
                Some(&i) => i,
                None => {
                    let idx = rg.nodes.len();
                    rg.nodes.push(PackageNode {
                        release: snap.key.release.clone(),
                        name: rec.name.clone(),
                        version: rec.version.clone(),
                        project: project_of(rec).to_string(),
                        presence: BTreeSet::new(),
                        record: rec.clone(),
                    });
                    rg.node_index.insert(key, idx);
                    rg.by_name
                        .entry(rec.name.clone())
                        .or_default()
                        .push(idx);
                    idx
                }
            };
            rg.nodes[idx].presence.insert(snap.key.date);
            rg.nodes[idx].record = rec.clone();
            for provided in &rec.provides {
                rg.providers
                    .entry(provided.package.clone())
                    .or_default()
                    .insert(rec.name.clone());
            }
        }
    }

    // Second pass per release: project nodes, edges, adjacency, lift.
    let mut diagnostics = Vec::new();
    for rg in graph.releases.values_mut() {
        for (idx, node) in rg.nodes.iter().enumerate() {
            let project = rg
                .projects
                .entry(node.project.clone())
                .or_insert_with(|| ProjectNode {
                    release: rg.release.clone(),
                    name: node.project.clone(),
                    packages: BTreeSet::new(),
                    first_seen: node.first_seen(),
                    last_seen: node.last_seen(),
                });
            project.packages.insert(node.name.clone());
            project.first_seen = project.first_seen.min(node.first_seen());
            project.last_seen = project.last_seen.max(node.last_seen());
            let _ = idx;
        }

        let mut edges = Vec::new();
        for (idx, node) in rg.nodes.iter().enumerate() {
            for (prefix, clauses) in [("d", &node.record.depends), ("p", &node.record.pre_depends)]
            {
                for (ci, clause) in clauses.iter().enumerate() {
                    let clause_id = format!("{prefix}{ci}");
                    for atom in &clause.alternatives {
                        let real = rg.by_name.contains_key(&atom.package);
                        let provided = rg.providers.contains_key(&atom.package);
                        let dangling = !real && !provided;
                        if dangling {
                            diagnostics.push(format!(
                                "{}: {} {} clause {} targets missing package `{}`",
                                rg.release, node.name, node.version, clause_id, atom.package
                            ));
                        }
                        edges.push(PackageEdge {
                            src: idx,
                            target: atom.package.clone(),
                            clause_id: clause_id.clone(),
                            constraint: atom.constraint.clone(),
                            dangling,
                        });
                    }
                }
            }
        }

        for edge in &edges {
            let src = &rg.nodes[edge.src];
            if !rg.by_name.contains_key(&edge.target) {
                continue; // virtual or dangling: no name-level adjacency
            }
            if src.name != edge.target {
                rg.name_deps
                    .entry(src.name.clone())
                    .or_default()
                    .insert(edge.target.clone());
                rg.name_rdeps
                    .entry(edge.target.clone())
                    .or_default()
                    .insert(src.name.clone());
            }
            // Project lift: every package edge whose endpoints live in
            // different projects contributes one project edge.
            let src_project = src.project.clone();
            for tgt_idx in rg.by_name.get(&edge.target).into_iter().flatten() {
                let dst_project = rg.nodes[*tgt_idx].project.clone();
                if src_project != dst_project {
                    rg.project_edges
                        .insert((src_project.clone(), dst_project.clone()));
                    rg.project_deps
                        .entry(src_project.clone())
                        .or_default()
                        .insert(dst_project.clone());
                    rg.project_rdeps
                        .entry(dst_project)
                        .or_default()
                        .insert(src_project.clone());
                }
            }
        }
        rg.edges = edges;
        // Ensure every name/project has an adjacency entry for lookups.
        for name in rg.by_name.keys() {
            rg.name_deps.entry(name.clone()).or_default();
            rg.name_rdeps.entry(name.clone()).or_default();
        }
        for name in rg.projects.keys() {
            rg.project_deps.entry(name.clone()).or_default();
            rg.project_rdeps.entry(name.clone()).or_default();
        }
    }
    graph.diagnostics = diagnostics;
    Ok(graph)
}

/// The project-level edge set of one release — exactly the lift of its
/// package edges (self-edges dropped).
pub fn lift_to_projects(graph: &EDGraph, release: &str) -> Result<BTreeSet<(String, String)>, GraphError> {
    graph
        .releases
        .get(release)
        .map(|rg| rg.project_edges.clone())
        .ok_or_else(|| GraphError::UnknownRelease(release.to_string()))
}

/// Detect version-change events for every name (package or project level)
/// across the sampled dates of one release. A project's version on a date is
/// the highest version among its packages present that day.
pub fn detect_updates(
    graph: &EDGraph,
    release: &str,
    level: GraphLevel,
) -> Result<Vec<UpdateEvent>, GraphError> {
    let rg = graph
        .releases
        .get(release)
        .ok_or_else(|| GraphError::UnknownRelease(release.to_string()))?;
    let names: Vec<&String> = match level {
        GraphLevel::Package => rg.by_name.keys().collect(),
        GraphLevel::Project => rg.projects.keys().collect(),
    };
    let version_on = |name: &str, date: NaiveDate| -> Option<DebVersion> {
        match level {
            GraphLevel::Package => rg.version_on(name, date).cloned(),
            GraphLevel::Project => rg
                .projects
                .get(name)?
                .packages
                .iter()
                .filter_map(|p| rg.version_on(p, date))
                .max_by(|a, b| compare(a, b))
                .cloned(),
        }
    };
    let mut events = Vec::new();
    for name in names {
        let mut last: Option<DebVersion> = None;
        for &date in &rg.dates {
            let Some(current) = version_on(name, date) else {
                continue; // absent that day; gaps do not reset the timeline
            };
            if let Some(prev) = &last {
                if compare(prev, &current) != std::cmp::Ordering::Equal {
                    events.push(UpdateEvent {
                        release: release.to_string(),
                        level,
                        name: name.clone(),
                        old_version: prev.clone(),
                        new_version: current.clone(),
                        date,
                    });
                }
            }
            last = Some(current);
        }
    }
    events.sort_by(|a, b| (a.date, &a.name).cmp(&(b.date, &b.name)));
    Ok(events)
}

/// Read a version's upstream as MAJOR.MINOR.PATCH: split on dots, take each
/// segment's leading digit run, missing segments count as 0. A first segment
/// without digits makes the whole reading non-semver.
fn semver_fields(v: &DebVersion) -> ([i64; 3], bool) {
    let mut fields = [0i64; 3];
    let mut non_semver = false;
    for (i, seg) in v.upstream().split('.').take(3).enumerate() {
        let digits: String = seg.chars().take_while(|c| c.is_ascii_digit()).take(18).collect();
        if digits.is_empty() {
            non_semver = true;
        } else {
            fields[i] = digits.parse().expect("≤18 digits fit in i64");
        }
    }
    (fields, non_semver)
}

/// Per-field subtraction `v2 − v1` of the two versions' semver readings.
pub fn semver_span(v1: &DebVersion, v2: &DebVersion) -> SemverSpan {
    let (a, flag_a) = semver_fields(v1);
    let (b, flag_b) = semver_fields(v2);
    SemverSpan {
        d_major: b[0] - a[0],
        d_minor: b[1] - a[1],
        d_patch: b[2] - a[2],
        non_semver: flag_a || flag_b,
    }
}

fn closure(
    rg: &ReleaseGraph,
    start: &str,
    level: GraphLevel,
    reverse: bool,
) -> Result<BTreeSet<String>, GraphError> {
    if !rg.contains_name(level, start) {
        return Err(GraphError::UnknownNode {
            release: rg.release.clone(),
            name: start.to_string(),
            level,
        });
    }
    let adj = rg.adjacency(level, reverse);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(current) = queue.pop_front() {
        for next in adj.get(&current).into_iter().flatten() {
            if next != start && seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    Ok(seen)
}

/// Reverse-reachability closure: everything that (transitively) depends on
/// `name`, excluding `name` itself.
pub fn transitive_dependents(
    graph: &EDGraph,
    release: &str,
    name: &str,
    level: GraphLevel,
) -> Result<BTreeSet<String>, GraphError> {
    let rg = graph
        .releases
        .get(release)
        .ok_or_else(|| GraphError::UnknownRelease(release.to_string()))?;
    closure(rg, name, level, true)
}

/// Forward-reachability closure: everything `name` (transitively) depends on,
/// excluding `name` itself.
pub fn transitive_dependencies(
    graph: &EDGraph,
    release: &str,
    name: &str,
    level: GraphLevel,
) -> Result<BTreeSet<String>, GraphError> {
    let rg = graph
        .releases
        .get(release)
        .ok_or_else(|| GraphError::UnknownRelease(release.to_string()))?;
    closure(rg, name, level, false)
}

/// Export file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

impl ExportFormat {
    fn node_file(self) -> &'static str {
        match self {
            ExportFormat::Csv => "nodes.csv",
            ExportFormat::Jsonl => "nodes.jsonl",
        }
    }

    fn edge_file(self) -> &'static str {
        match self {
            ExportFormat::Csv => "edges.csv",
            ExportFormat::Jsonl => "edges.jsonl",
        }
    }
}

/// One exported node row (package or project).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRow {
    pub id: String,
    pub kind: String,
    pub name: String,
    pub version: String,
    pub release: String,
    pub project: String,
    pub first_seen: String,
    pub last_seen: String,
}

/// One exported edge row. Package-level rows carry the clause id and any
/// constraint; project-level rows are bare src→dst pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRow {
    pub src: String,
    pub dst: String,
    pub level: String,
    pub clause_id: String,
    pub relation: String,
    pub constraint_version: String,
    pub dangling: String,
}

/// Flat, deterministic row view of a graph — the exchange representation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphRows {
    pub nodes: Vec<NodeRow>,
    pub edges: Vec<EdgeRow>,
}

/// Project a graph onto its exported rows (sorted, deterministic).
pub fn graph_rows(graph: &EDGraph) -> GraphRows {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for rg in graph.releases.values() {
        for &idx in rg.node_index.values() {
            let n = &rg.nodes[idx];
            nodes.push(NodeRow {
                id: n.id(),
                kind: "package".to_string(),
                name: n.name.clone(),
                version: n.version.to_string(),
                release: n.release.clone(),
                project: n.project.clone(),
                first_seen: n.first_seen().to_string(),
                last_seen: n.last_seen().to_string(),
            });
        }
        for p in rg.projects.values() {
            nodes.push(NodeRow {
                id: p.id(),
                kind: "project".to_string(),
                name: p.name.clone(),
                version: String::new(),
                release: p.release.clone(),
                project: p.name.clone(),
                first_seen: p.first_seen.to_string(),
                last_seen: p.last_seen.to_string(),
            });
        }
        for e in &rg.edges {
            let n = &rg.nodes[e.src];
            edges.push(EdgeRow {
                src: n.id(),
                dst: e.target.clone(),
                level: "package".to_string(),
                clause_id: e.clause_id.clone(),
                relation: e
                    .constraint
                    .as_ref()
                    .map(|c| c.relation.as_str().to_string())
                    .unwrap_or_default(),
                constraint_version: e
                    .constraint
                    .as_ref()
                    .map(|c| c.version.to_string())
                    .unwrap_or_default(),
                dangling: e.dangling.to_string(),
            });
        }
        for (a, b) in &rg.project_edges {
            edges.push(EdgeRow {
                src: format!("P:{}:{}", rg.release, a),
                dst: b.clone(),
                level: "project".to_string(),
                clause_id: String::new(),
                relation: String::new(),
                constraint_version: String::new(),
                dangling: "false".to_string(),
            });
        }
    }
    nodes.sort();
    edges.sort();
    GraphRows { nodes, edges }
}

/// Write `nodes.{csv,jsonl}` and `edges.{csv,jsonl}` into `out_dir`.
/// Output is byte-deterministic for a given graph.
pub fn export_graph(
    graph: &EDGraph,
    format: ExportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, GraphError> {
    let rows = graph_rows(graph);
    std::fs::create_dir_all(out_dir).map_err(|source| GraphError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let node_path = out_dir.join(format.node_file());
    let edge_path = out_dir.join(format.edge_file());
    match format {
        ExportFormat::Csv => {
            write_csv(&node_path, &NODE_HEADER, &rows.nodes)?;
            write_csv(&edge_path, &EDGE_HEADER, &rows.edges)?;
        }
        ExportFormat::Jsonl => {
            write_jsonl(&node_path, &rows.nodes)?;
            write_jsonl(&edge_path, &rows.edges)?;
        }
    }
    Ok(vec![node_path, edge_path])
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), GraphError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| GraphError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if rows.is_empty() {
        // serde-driven headers only appear with the first record; an empty
        // export must still carry them.
        w.write_record(header).map_err(|source| GraphError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    for row in rows {
        w.serialize(row).map_err(|source| GraphError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

const NODE_HEADER: [&str; 8] = [
    "id", "kind", "name", "version", "release", "project", "first_seen", "last_seen",
];
const EDGE_HEADER: [&str; 7] = [
    "src", "dst", "level", "clause_id", "relation", "constraint_version", "dangling",
];

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), GraphError> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("rows serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read rows back from an export directory. Together with [`graph_rows`]
/// this allows checking that an export round-trips isomorphically.
pub fn import_graph(dir: &Path, format: ExportFormat) -> Result<GraphRows, GraphError> {
    let node_path = dir.join(format.node_file());
    let edge_path = dir.join(format.edge_file());
    let (mut nodes, mut edges) = match format {
        ExportFormat::Csv => (read_csv(&node_path)?, read_csv(&edge_path)?),
        ExportFormat::Jsonl => (read_jsonl(&node_path)?, read_jsonl(&edge_path)?),
    };
    nodes.sort();
    edges.sort();
    Ok(GraphRows { nodes, edges })
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, GraphError> {
    let mut r = csv::Reader::from_path(path).map_err(|source| GraphError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|source| GraphError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            serde_json::from_str(line).map_err(|e| GraphError::BadRow {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Count raw dependency clauses and distinct target names per package node —
/// both readings of "external dependencies per package".
pub fn dependency_counts(rg: &ReleaseGraph) -> BTreeMap<String, (usize, usize)> {
    let mut out = BTreeMap::new();
    for node in &rg.nodes {
        let clauses = node.record.depends.len() + node.record.pre_depends.len();
        let distinct: BTreeSet<&str> = node
            .record
            .depends
            .iter()
            .chain(node.record.pre_depends.iter())
            .flat_map(|c| c.alternatives.iter())
            .map(|a| a.package.as_str())
            .collect();
        out.insert(node.id(), (clauses, distinct.len()));
    }
    out
}

/// Convenience: dependency clauses of a record in graph-edge order
/// (`Depends` then `Pre-Depends`), paired with their clause ids.
pub fn clauses_with_ids(record: &PackageRecord) -> Vec<(String, &DependencyClause)> {
    let mut out = Vec::new();
    for (i, c) in record.depends.iter().enumerate() {
        out.push((format!("d{i}"), c));
    }
    for (i, c) in record.pre_depends.iter().enumerate() {
        out.push((format!("p{i}"), c));
    }
    out
}
