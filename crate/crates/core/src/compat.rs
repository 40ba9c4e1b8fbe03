//! Cross-release compatibility analytics: project diffs, clause satisfaction
//! of release B's dependencies against release A's inventory, and the
//! four-way classification of why a dependency fails.
//!
//! All functions here are pure over immutable inventories; matrix cells are
//! independent and computed concurrently when the `parallel` feature is on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{DependencyAtom, DependencyClause, PackageRecord};
use crate::graph::{clauses_with_ids, EDGraph};
use crate::version::{satisfies, DebVersion};

#[derive(Debug, Error)]
pub enum CompatError {
    #[error("unknown release `{0}` in graph")]
    UnknownRelease(String),
    #[error("release `{release}` has no snapshot at {date}")]
    NoSnapshotAt { release: String, date: NaiveDate },
    #[error("classify_reason called on an atom satisfied by inventory `{release}`: {atom}")]
    SatisfiedAtom { release: String, atom: String },
    #[error("need at least one inventory")]
    NoInventories,
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
}

/// One package available on a release at the reference date.
#[derive(Debug, Clone)]
pub struct InventoryEntry {
    pub record: PackageRecord,
    pub project: String,
}

/// The package set of one release at one date: one version per name, plus a
/// virtual-name → providers map.
#[derive(Debug, Clone)]
pub struct ReleaseInventory {
    pub release: String,
    pub at_date: NaiveDate,
    entries: BTreeMap<String, InventoryEntry>,
    providers: BTreeMap<String, BTreeSet<String>>,
    /// Diagnostics from inventory construction (duplicate names etc.).
    pub diagnostics: Vec<String>,
}

impl ReleaseInventory {
    /// Build the inventory of `release` as of `date` from a built graph. When
    /// `date` is `None`, the release's final sampled date is used — the
    /// reference date for cross-release comparisons.
    pub fn from_graph(
        graph: &EDGraph,
        release: &str,
        date: Option<NaiveDate>,
    ) -> Result<Self, CompatError> {
        let rg = graph
            .releases
            .get(release)
            .ok_or_else(|| CompatError::UnknownRelease(release.to_string()))?;
        let at_date = match date {
            Some(d) => {
                if !rg.dates.contains(&d) {
                    return Err(CompatError::NoSnapshotAt {
                        release: release.to_string(),
                        date: d,
                    });
                }
                d
            }
            None => *rg.dates.last().ok_or(CompatError::NoSnapshotAt {
                release: release.to_string(),
                date: NaiveDate::MIN,
            })?,
        };
        let mut inv = ReleaseInventory {
            release: release.to_string(),
            at_date,
            entries: BTreeMap::new(),
            providers: BTreeMap::new(),
            diagnostics: Vec::new(),
        };
        for node in rg.nodes() {
            if !node.present_on(at_date) {
                continue;
            }
            inv.insert(node.record.clone(), node.project.clone());
        }
        Ok(inv)
    }

    /// Build directly from records (e.g. one parsed snapshot).
    pub fn from_records(
        release: &str,
        at_date: NaiveDate,
        records: impl IntoIterator<Item = PackageRecord>,
    ) -> Self {
        let mut inv = ReleaseInventory {
            release: release.to_string(),
            at_date,
            entries: BTreeMap::new(),
            providers: BTreeMap::new(),
            diagnostics: Vec::new(),
        };
        for rec in records {
            let project = rec.source_or_name().to_string();
            inv.insert(rec, project);
        }
        inv
    }

    fn insert(&mut self, record: PackageRecord, project: String) {
        use std::collections::btree_map::Entry;
        for provided in &record.provides {
            self.providers
                .entry(provided.package.clone())
                .or_default()
                .insert(record.name.clone());
        }
        match self.entries.entry(record.name.clone()) {
            Entry::Vacant(v) => {
                v.insert(InventoryEntry { record, project });
            }
            Entry::Occupied(mut o) => {
                // One version per name: a mirror only serves one at a time.
                // Keep the higher version and note the anomaly.
                self.diagnostics.push(format!(
                    "{} {}: multiple versions at {}; keeping the higher",
                    self.release, record.name, self.at_date
                ));
                if record.version > o.get().record.version {
                    o.insert(InventoryEntry { record, project });
                }
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&InventoryEntry> {
        self.entries.get(name)
    }

    pub fn version_of(&self, name: &str) -> Option<&DebVersion> {
        self.entries.get(name).map(|e| &e.record.version)
    }

    pub fn provides(&self, name: &str) -> bool {
        self.providers.contains_key(name)
    }

    pub fn providers_of(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.providers.get(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &InventoryEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct project names present in this inventory.
    pub fn projects(&self) -> BTreeSet<String> {
        self.entries.values().map(|e| e.project.clone()).collect()
    }

    /// Packages grouped by project.
    pub fn packages_by_project(&self) -> BTreeMap<String, Vec<&InventoryEntry>> {
        let mut out: BTreeMap<String, Vec<&InventoryEntry>> = BTreeMap::new();
        for entry in self.entries.values() {
            out.entry(entry.project.clone()).or_default().push(entry);
        }
        out
    }
}

/// Why a dependency atom fails against an inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IncompatReason {
    /// The host requires a later version than the inventory offers (`>>`/`>=`).
    NewerRequired,
    /// The host requires an earlier version (`<<`/`<=`).
    OlderRequired,
    /// The host pins an exact version that differs (`=`).
    ExactMismatch,
    /// The target package does not exist at all.
    Missing,
}

impl IncompatReason {
    /// Compact labels used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            IncompatReason::NewerRequired => ">",
            IncompatReason::OlderRequired => "<",
            IncompatReason::ExactMismatch => "=",
            IncompatReason::Missing => "no",
        }
    }

    pub const ALL: [IncompatReason; 4] = [
        IncompatReason::NewerRequired,
        IncompatReason::OlderRequired,
        IncompatReason::ExactMismatch,
        IncompatReason::Missing,
    ];
}

impl fmt::Display for IncompatReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One unsatisfied clause of one package of release B checked against
/// release A, classified by its first-listed alternative.
#[derive(Debug, Clone, Serialize)]
pub struct IncompatFinding {
    pub release_a: String,
    pub release_b: String,
    /// Project and package on release B that host the failing clause.
    pub project: String,
    pub package: String,
    pub clause_id: String,
    /// The first-listed alternative — the classification basis.
    pub atom: DependencyAtom,
    pub reason: IncompatReason,
    /// Reasons of every failing alternative, in listed order.
    pub all_reasons: Vec<IncompatReason>,
    /// Version of `atom.package` on release A, absent when A lacks the name.
    pub available_version: Option<DebVersion>,
}

/// Is a single atom satisfied by the inventory? A named package must exist
/// with a version meeting the constraint; an unversioned atom is also
/// satisfied when some package Provides the name. Versioned constraints are
/// never satisfied through Provides.
pub fn atom_satisfied(atom: &DependencyAtom, inv: &ReleaseInventory) -> bool {
    match (inv.version_of(&atom.package), &atom.constraint) {
        (Some(_), None) => true,
        (Some(version), Some(constraint)) => satisfies(version, constraint),
        (None, None) => inv.provides(&atom.package),
        (None, Some(_)) => false,
    }
}

/// Is a clause satisfied? True iff any alternative is.
pub fn clause_satisfied(clause: &DependencyClause, inv: &ReleaseInventory) -> bool {
    clause.alternatives.iter().any(|a| atom_satisfied(a, inv))
}

/// Classify why an unsatisfied atom fails: MISSING when the name is absent
/// (and not provided), otherwise by the constraint's relation. Calling this
/// on a satisfied atom is a contract violation and reported as an error.
pub fn classify_reason(
    atom: &DependencyAtom,
    inv: &ReleaseInventory,
) -> Result<IncompatReason, CompatError> {
    if atom_satisfied(atom, inv) {
        return Err(CompatError::SatisfiedAtom {
            release: inv.release.clone(),
            atom: atom.to_string(),
        });
    }
    let exists = inv.version_of(&atom.package).is_some() || inv.provides(&atom.package);
    if !exists {
        return Ok(IncompatReason::Missing);
    }
    // The name exists (really or via Provides) so a constraint must be the
    // problem; an unversioned atom on an existing name is always satisfied.
    let constraint = atom
        .constraint
        .as_ref()
        .expect("unsatisfied atom on existing name carries a constraint");
    use crate::version::VersionRelation::*;
    Ok(match constraint.relation {
        StrictlyLater | LaterOrEqual => IncompatReason::NewerRequired,
        StrictlyEarlier | EarlierOrEqual => IncompatReason::OlderRequired,
        Exact => IncompatReason::ExactMismatch,
    })
}

/// Project-name differences between two inventories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectDiff {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub common: BTreeSet<String>,
}

/// Projects added/removed/common going from inventory `a` to inventory `b`.
pub fn project_diff(a: &ReleaseInventory, b: &ReleaseInventory) -> ProjectDiff {
    let pa = a.projects();
    let pb = b.projects();
    ProjectDiff {
        added: pb.difference(&pa).cloned().collect(),
        removed: pa.difference(&pb).cloned().collect(),
        common: pa.intersection(&pb).cloned().collect(),
    }
}

/// Check every dependency clause of release B's common-project packages
/// against release A. Returns the incompatible project set and one finding
/// per unsatisfied clause.
pub fn incompatible_projects(
    a: &ReleaseInventory,
    b: &ReleaseInventory,
) -> Result<(BTreeSet<String>, Vec<IncompatFinding>), CompatError> {
    let common = project_diff(a, b).common;
    let entries: Vec<&InventoryEntry> = b
        .entries
        .values()
        .filter(|e| common.contains(&e.project))
        .collect();

    let check_entry = |entry: &&InventoryEntry| -> Result<Vec<IncompatFinding>, CompatError> {
        let mut findings = Vec::new();
        for (clause_id, clause) in clauses_with_ids(&entry.record) {
            if clause_satisfied(clause, a) {
                continue;
            }
            let mut all_reasons = Vec::with_capacity(clause.alternatives.len());
            for alt in &clause.alternatives {
                all_reasons.push(classify_reason(alt, a)?);
            }
            let atom = clause.alternatives[0].clone();
            findings.push(IncompatFinding {
                release_a: a.release.clone(),
                release_b: b.release.clone(),
                project: entry.project.clone(),
                package: entry.record.name.clone(),
                clause_id,
                reason: all_reasons[0],
                all_reasons,
                available_version: a.version_of(&atom.package).cloned(),
                atom,
            });
        }
        Ok(findings)
    };

    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<IncompatFinding>> = {
        use rayon::prelude::*;
        entries
            .par_iter()
            .map(check_entry)
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<IncompatFinding>> = entries
        .iter()
        .map(check_entry)
        .collect::<Result<_, _>>()?;

    let findings: Vec<IncompatFinding> = nested.into_iter().flatten().collect();
    let projects: BTreeSet<String> = findings.iter().map(|f| f.project.clone()).collect();
    Ok((projects, findings))
}

/// Sequential twin of [`incompatible_projects`], kept callable regardless of
/// features so the two strategies can be compared.
pub fn incompatible_projects_seq(
    a: &ReleaseInventory,
    b: &ReleaseInventory,
) -> Result<(BTreeSet<String>, Vec<IncompatFinding>), CompatError> {
    let common = project_diff(a, b).common;
    let mut findings = Vec::new();
    for entry in b.entries.values() {
        if !common.contains(&entry.project) {
            continue;
        }
        for (clause_id, clause) in clauses_with_ids(&entry.record) {
            if clause_satisfied(clause, a) {
                continue;
            }
            let mut all_reasons = Vec::with_capacity(clause.alternatives.len());
            for alt in &clause.alternatives {
                all_reasons.push(classify_reason(alt, a)?);
            }
            let atom = clause.alternatives[0].clone();
            findings.push(IncompatFinding {
                release_a: a.release.clone(),
                release_b: b.release.clone(),
                project: entry.project.clone(),
                package: entry.record.name.clone(),
                clause_id,
                reason: all_reasons[0],
                all_reasons,
                available_version: a.version_of(&atom.package).cloned(),
                atom,
            });
        }
    }
    let projects: BTreeSet<String> = findings.iter().map(|f| f.project.clone()).collect();
    Ok((projects, findings))
}

/// Per ordered release pair: the incompatible projects plus two reason
/// aggregations — finding-level (every unsatisfied clause counts) and
/// project-level (each project counted once per reason).
#[derive(Debug, Clone, Default, Serialize)]
pub struct MatrixCell {
    pub incompatible_projects: BTreeSet<String>,
    pub finding_count: usize,
    pub reason_findings: BTreeMap<String, usize>,
    pub reason_projects: BTreeMap<String, usize>,
}

/// Square matrix over all ordered inventory pairs.
#[derive(Debug, Default)]
pub struct IncompatMatrix {
    pub releases: Vec<String>,
    pub cells: BTreeMap<(String, String), MatrixCell>,
    pub findings: Vec<IncompatFinding>,
}

impl IncompatMatrix {
    pub fn cell(&self, a: &str, b: &str) -> Option<&MatrixCell> {
        self.cells.get(&(a.to_string(), b.to_string()))
    }
}

fn cell_from_findings(projects: BTreeSet<String>, findings: &[IncompatFinding]) -> MatrixCell {
    let mut reason_findings: BTreeMap<String, usize> = BTreeMap::new();
    let mut projects_by_reason: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for f in findings {
        *reason_findings.entry(f.reason.label().to_string()).or_default() += 1;
        projects_by_reason
            .entry(f.reason.label().to_string())
            .or_default()
            .insert(&f.project);
    }
    MatrixCell {
        incompatible_projects: projects,
        finding_count: findings.len(),
        reason_findings,
        reason_projects: projects_by_reason
            .into_iter()
            .map(|(k, v)| (k, v.len()))
            .collect(),
    }
}

/// Compute all ordered pairs. Diagonal cells are present and empty for an
/// internally closed release. Cells are independent; with the `parallel`
/// feature they are computed concurrently.
pub fn incompat_matrix(inventories: &[ReleaseInventory]) -> Result<IncompatMatrix, CompatError> {
    if inventories.is_empty() {
        return Err(CompatError::NoInventories);
    }
    let releases: Vec<String> = inventories.iter().map(|i| i.release.clone()).collect();
    let pairs: Vec<(usize, usize)> = (0..inventories.len())
        .flat_map(|i| (0..inventories.len()).map(move |j| (i, j)))
        .collect();

    type PairCell = ((String, String), MatrixCell, Vec<IncompatFinding>);
    let compute = |&(i, j): &(usize, usize)| -> Result<PairCell, CompatError> {
        let (a, b) = (&inventories[i], &inventories[j]);
        let (projects, findings) = incompatible_projects(a, b)?;
        let cell = cell_from_findings(projects, &findings);
        Ok(((a.release.clone(), b.release.clone()), cell, findings))
    };

    #[cfg(feature = "parallel")]
    let computed: Vec<_> = {
        use rayon::prelude::*;
        pairs.par_iter().map(compute).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let computed: Vec<_> = pairs.iter().map(compute).collect::<Result<_, _>>()?;

    let mut matrix = IncompatMatrix {
        releases,
        ..IncompatMatrix::default()
    };
    for (key, cell, findings) in computed {
        matrix.cells.insert(key, cell);
        matrix.findings.extend(findings);
    }
    matrix
        .findings
        .sort_by(|x, y| {
            (&x.release_a, &x.release_b, &x.project, &x.package, &x.clause_id)
                .cmp(&(&y.release_a, &y.release_b, &y.project, &y.package, &y.clause_id))
        });
    Ok(matrix)
}

/// Write `matrix.csv` (project counts, rows = A, columns = B), `reasons.csv`
/// (per-cell histograms, both aggregations) and `findings.csv` (one row per
/// finding). Byte-deterministic.
pub fn write_matrix_reports(matrix: &IncompatMatrix, out_dir: &Path) -> Result<Vec<PathBuf>, CompatError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CompatError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| CompatError::Io { path, source }
    };

    let matrix_path = out_dir.join("matrix.csv");
    let mut out = String::new();
    out.push_str("release");
    for b in &matrix.releases {
        out.push(',');
        out.push_str(b);
    }
    out.push('\n');
    for a in &matrix.releases {
        out.push_str(a);
        for b in &matrix.releases {
            out.push(',');
            if a == b {
                out.push('-');
            } else if let Some(cell) = matrix.cell(a, b) {
                out.push_str(&cell.incompatible_projects.len().to_string());
            }
        }
        out.push('\n');
    }
    std::fs::write(&matrix_path, out).map_err(io_err(&matrix_path))?;

    let reasons_path = out_dir.join("reasons.csv");
    let mut out = String::from("release_a,release_b,reason,findings,projects\n");
    for ((a, b), cell) in &matrix.cells {
        if a == b {
            continue;
        }
        for reason in IncompatReason::ALL {
            let label = reason.label();
            let findings = cell.reason_findings.get(label).copied().unwrap_or(0);
            let projects = cell.reason_projects.get(label).copied().unwrap_or(0);
            out.push_str(&format!("{a},{b},{label},{findings},{projects}\n"));
        }
    }
    std::fs::write(&reasons_path, out).map_err(io_err(&reasons_path))?;

    let findings_path = out_dir.join("findings.csv");
    let mut w = csv::Writer::from_path(&findings_path).map_err(|source| CompatError::Csv {
        path: findings_path.clone(),
        source,
    })?;
    w.write_record([
        "release_a",
        "release_b",
        "project",
        "package",
        "clause_id",
        "atom",
        "reason",
        "available_version",
    ])
    .map_err(|source| CompatError::Csv {
        path: findings_path.clone(),
        source,
    })?;
    for f in &matrix.findings {
        w.write_record([
            f.release_a.as_str(),
            f.release_b.as_str(),
            f.project.as_str(),
            f.package.as_str(),
            f.clause_id.as_str(),
            &f.atom.to_string(),
            f.reason.label(),
            &f.available_version
                .as_ref()
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ])
        .map_err(|source| CompatError::Csv {
            path: findings_path.clone(),
            source,
        })?;
    }
    w.flush().map_err(io_err(&findings_path))?;
    Ok(vec![matrix_path, reasons_path, findings_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::parse_packages_index;

    fn inv(release: &str, stanzas: &str) -> ReleaseInventory {
        let parsed = parse_packages_index(stanzas);
        assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        ReleaseInventory::from_records(
            release,
            NaiveDate::from_ymd_opt(2021, 6, 2).unwrap(),
            parsed.records,
        )
    }

    fn stanza(name: &str, version: &str, extra: &str) -> String {
        format!("Package: {name}\nVersion: {version}\nArchitecture: amd64\n{extra}\n")
    }

    fn atom(s: &str) -> DependencyAtom {
        crate::control::parse_depends(s).unwrap().remove(0).alternatives.remove(0)
    }

    fn clause(s: &str) -> DependencyClause {
        crate::control::parse_depends(s).unwrap().remove(0)
    }

    #[test]
    fn glow_style_constraint_unsatisfied() {
        let a = inv("r1", &stanza("glfw", "3.0.4-1", ""));
        assert!(!clause_satisfied(&clause("glfw (>= 3.3)"), &a));
        assert_eq!(
            classify_reason(&atom("glfw (>= 3.3)"), &a).unwrap(),
            IncompatReason::NewerRequired
        );
    }

    #[test]
    fn alternative_satisfies_clause() {
        let a = inv("r1", &stanza("libb", "1.0-1", ""));
        assert!(clause_satisfied(&clause("liba | libb"), &a));
    }

    #[test]
    fn provides_satisfies_only_unversioned() {
        let a = inv("r1", &stanza("postfix-lite", "2.0-1", "Provides: mail-transport-agent"));
        assert!(clause_satisfied(&clause("mail-transport-agent"), &a));
        assert!(!clause_satisfied(&clause("mail-transport-agent (>= 1.0)"), &a));
        // Classification of the versioned-vs-provided corner: the name
        // exists via Provides, so the relation decides, not MISSING.
        assert_eq!(
            classify_reason(&atom("mail-transport-agent (>= 1.0)"), &a).unwrap(),
            IncompatReason::NewerRequired
        );
    }

    #[test]
    fn classify_all_four_reasons() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("libfoo", "1.62.0-1", ""), stanza("oldlib", "2.1-1", "")),
        );
        assert_eq!(
            classify_reason(&atom("libfoo (>= 1.70.0)"), &a).unwrap(),
            IncompatReason::NewerRequired
        );
        assert_eq!(
            classify_reason(&atom("libfoo (= 1.55.0-1)"), &a).unwrap(),
            IncompatReason::ExactMismatch
        );
        assert_eq!(
            classify_reason(&atom("oldlib (<< 2.0)"), &a).unwrap(),
            IncompatReason::OlderRequired
        );
        assert_eq!(
            classify_reason(&atom("ghost-pkg"), &a).unwrap(),
            IncompatReason::Missing
        );
    }

    #[test]
    fn classify_on_satisfied_atom_is_contract_violation() {
        let a = inv("r1", &stanza("libfoo", "1.62.0-1", ""));
        assert!(matches!(
            classify_reason(&atom("libfoo (>= 1.0)"), &a),
            Err(CompatError::SatisfiedAtom { .. })
        ));
    }

    #[test]
    fn project_diff_set_arithmetic() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("alpha", "1-1", ""), stanza("beta", "1-1", "")),
        );
        let b = inv(
            "r2",
            &format!("{}\n{}", stanza("beta", "2-1", ""), stanza("gamma", "1-1", "")),
        );
        let diff = project_diff(&a, &b);
        assert_eq!(diff.added, BTreeSet::from(["gamma".to_string()]));
        assert_eq!(diff.removed, BTreeSet::from(["alpha".to_string()]));
        assert_eq!(diff.common, BTreeSet::from(["beta".to_string()]));
        let same = project_diff(&a, &a);
        assert!(same.added.is_empty() && same.removed.is_empty());
    }

    #[test]
    fn incompatible_projects_definition() {
        // B's demo depends on x (>= 2.0); A has x 1.0 → NEWER_REQUIRED.
        // B's other depends on yy which A lacks → MISSING. B-only projects
        // are outside the common restriction and never reported.
        let a = inv(
            "r1",
            &format!(
                "{}\n{}\n{}",
                stanza("demo", "1.0-1", ""),
                stanza("other", "1.0-1", ""),
                stanza("xx", "1.0-1", "")
            ),
        );
        let b = inv(
            "r2",
            &format!(
                "{}\n{}\n{}\n{}",
                stanza("demo", "2.0-1", "Depends: xx (>= 2.0)"),
                stanza("other", "2.0-1", "Depends: yy"),
                stanza("bnew", "1.0-1", "Depends: zz-missing"),
                stanza("xx", "2.0-1", "")
            ),
        );
        let (projects, findings) = incompatible_projects(&a, &b).unwrap();
        assert_eq!(
            projects,
            BTreeSet::from(["demo".to_string(), "other".to_string()])
        );
        assert_eq!(findings.len(), 2);
        let by_pkg: BTreeMap<&str, &IncompatFinding> =
            findings.iter().map(|f| (f.package.as_str(), f)).collect();
        assert_eq!(by_pkg["demo"].reason, IncompatReason::NewerRequired);
        assert_eq!(
            by_pkg["demo"].available_version.as_ref().unwrap().to_string(),
            "1.0-1"
        );
        assert_eq!(by_pkg["other"].reason, IncompatReason::Missing);
        assert!(by_pkg["other"].available_version.is_none());
        // MISSING findings never carry an available version.
        for f in &findings {
            if f.reason == IncompatReason::Missing {
                assert!(f.available_version.is_none());
            }
        }
    }

    #[test]
    fn multi_reason_clause_classified_by_first_alternative() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("xx", "1.0-1", ""), stanza("app", "0.9-1", "")),
        );
        let b = inv(
            "r2",
            &format!(
                "{}\n{}",
                stanza("app", "1.0-1", "Depends: xx (>= 2.0) | nonexistent"),
                stanza("xx", "2.0-1", "")
            ),
        );
        let (_, findings) = incompatible_projects(&a, &b).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].reason, IncompatReason::NewerRequired);
        assert_eq!(
            findings[0].all_reasons,
            vec![IncompatReason::NewerRequired, IncompatReason::Missing]
        );
    }

    #[test]
    fn seq_and_parallel_agree() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("xx", "1.0-1", ""), stanza("app", "1.0-1", "")),
        );
        let b = inv(
            "r2",
            &format!(
                "{}\n{}",
                stanza("app", "2.0-1", "Depends: xx (>= 2.0)"),
                stanza("xx", "2.0-1", "")
            ),
        );
        let fast = incompatible_projects(&a, &b).unwrap();
        let slow = incompatible_projects_seq(&a, &b).unwrap();
        assert_eq!(fast.0, slow.0);
        assert_eq!(fast.1.len(), slow.1.len());
        for (x, y) in fast.1.iter().zip(slow.1.iter()) {
            assert_eq!(x.package, y.package);
            assert_eq!(x.reason, y.reason);
        }
    }

    #[test]
    fn matrix_shape_and_self_compatibility() {
        let closed = |rel: &str| {
            inv(
                rel,
                &format!(
                    "{}\n{}",
                    stanza("app", "1.0-1", "Depends: lib1 (>= 1.0)"),
                    stanza("lib1", "1.5-1", "")
                ),
            )
        };
        let matrix = incompat_matrix(&[closed("r1"), closed("r2")]).unwrap();
        assert_eq!(matrix.releases, vec!["r1", "r2"]);
        assert_eq!(matrix.cells.len(), 4);
        for cell in matrix.cells.values() {
            assert!(cell.incompatible_projects.is_empty());
        }
        assert!(incompat_matrix(&[]).is_err());
        let single = incompat_matrix(&[closed("r1")]).unwrap();
        assert_eq!(single.cells.len(), 1);
        assert!(single.cell("r1", "r1").unwrap().incompatible_projects.is_empty());
    }

    #[test]
    fn histogram_sums_to_finding_count() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("xx", "1.0-1", ""), stanza("app", "0.9-1", "")),
        );
        let b = inv(
            "r2",
            &format!(
                "{}\n{}",
                stanza("app", "1.0-1", "Depends: xx (>= 2.0), ghost1, ghost2"),
                stanza("xx", "2.0-1", "")
            ),
        );
        let matrix = incompat_matrix(&[a, b]).unwrap();
        let cell = matrix.cell("r1", "r2").unwrap();
        assert_eq!(cell.finding_count, 3);
        let sum: usize = cell.reason_findings.values().sum();
        assert_eq!(sum, cell.finding_count);
        assert_eq!(cell.reason_findings.get(">"), Some(&1));
        assert_eq!(cell.reason_findings.get("no"), Some(&2));
        assert_eq!(cell.reason_projects.get("no"), Some(&1));
    }

    #[test]
    fn report_files_deterministic() {
        let a = inv(
            "r1",
            &format!("{}\n{}", stanza("xx", "1.0-1", ""), stanza("app", "0.9-1", "")),
        );
        let b = inv(
            "r2",
            &format!(
                "{}\n{}",
                stanza("app", "1.0-1", "Depends: xx (>= 2.0)"),
                stanza("xx", "2.0-1", "")
            ),
        );
        let matrix = incompat_matrix(&[a, b]).unwrap();
        assert_eq!(matrix.findings.len(), 1);
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_matrix_reports(&matrix, dir1.path()).unwrap();
        write_matrix_reports(&matrix, dir2.path()).unwrap();
        for file in ["matrix.csv", "reasons.csv", "findings.csv"] {
            let x = std::fs::read(dir1.path().join(file)).unwrap();
            let y = std::fs::read(dir2.path().join(file)).unwrap();
            assert_eq!(x, y, "{file} differs between runs");
            assert!(!x.is_empty());
        }
    }
}
