//! The ccenv installer: resolve a package's full dependency closure against
//! one release index, download and extract the pinned `.deb`s into an
//! isolated root, synthesize the launcher environment, and emit an SBOM.
//! Deleting the root directory removes the whole installation; the host
//! system is never consulted or modified.
//!
//! Resolution and SBOM emission are pure; downloads parallelize per pin;
//! extraction into one workspace is single-writer.

pub mod deb;
pub mod launcher;
pub mod sbom;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{sha256_hex, BlobCache, CacheError};
use crate::control::{DependencyAtom, DependencyClause, PackageRecord};
use crate::snapshot::MirrorSnapshot;
use crate::version::{satisfies, DebVersion};

pub use deb::{deb_control, extract_archive, list_archive, parse_ar, parse_deb};
pub use launcher::{create_environment, find_desktop_entries, parse_desktop_entry, DesktopEntry};
pub use sbom::{emit_sbom, read_sbom, Sbom, SbomComponent, ToolInfo, SBOM_FILE};

/// Workspace marker file holding the plan; its presence is what `remove`
/// checks before deleting anything.
pub const MANIFEST_FILE: &str = ".ccenv-manifest";
pub const LAUNCHER_FILE: &str = "run.sh";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("package `{package}` not found in release {release}")]
    NotFound { package: String, release: String },
    #[error("resolution incomplete: {0:?}")]
    Incomplete(Vec<String>),
    #[error("download of `{pin}` failed: {reason}")]
    Download { pin: String, reason: String },
    #[error("corrupt artifact for `{pin}`: {reason}")]
    CorruptArtifact { pin: String, reason: String },
    #[error("bad archive: {reason}")]
    BadArchive { reason: String },
    #[error("archive entry `{entry}` escapes the extraction root")]
    PathEscape { entry: String },
    #[error("extracting `{entry}`: {reason}")]
    Extraction { entry: String, reason: String },
    #[error("destination {0} exists and is not empty")]
    DestNotEmpty(PathBuf),
    #[error("{0} is not a ccenv workspace (no {MANIFEST_FILE})")]
    NotAWorkspace(PathBuf),
    #[error("bad desktop entry: {reason}")]
    BadDesktopEntry { reason: String },
    #[error("bad SBOM: {reason}")]
    BadSbom { reason: String },
    #[error("bad workspace manifest: {reason}")]
    BadManifest { reason: String },
    #[error("I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// One resolved package: what to download and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pin {
    pub name: String,
    pub version: DebVersion,
    pub release: String,
    /// Mirror-relative path (the index `Filename` field).
    pub mirror_path: String,
    pub sha256: Option<String>,
    pub size: Option<u64>,
    /// Direct dependency pin names, sorted.
    pub depends: Vec<String>,
}

/// The full dependency closure of one root package against one release.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionPlan {
    pub root_package: String,
    pub target_release: String,
    /// Pins in breadth-first discovery order, root first; no two share a name.
    pub pins: Vec<Pin>,
    /// Rendered atoms of clauses no alternative of which resolved.
    pub unresolved: Vec<String>,
}

impl ResolutionPlan {
    /// Closure-complete plans install; anything else is an error carrying
    /// the unresolved atom list.
    pub fn require_complete(&self) -> Result<(), WorkspaceError> {
        if self.unresolved.is_empty() {
            Ok(())
        } else {
            Err(WorkspaceError::Incomplete(self.unresolved.clone()))
        }
    }

    pub fn pin(&self, name: &str) -> Option<&Pin> {
        self.pins.iter().find(|p| p.name == name)
    }
}

/// A finished installation.
#[derive(Debug)]
pub struct Workspace {
    pub root_dir: PathBuf,
    pub plan: ResolutionPlan,
    pub launcher: PathBuf,
    pub sbom: PathBuf,
    pub entry_command: Option<String>,
    /// All desktop entries found, lexicographic; the first usable one
    /// supplied the entry command.
    pub desktop_entries: Vec<PathBuf>,
}

/// What `.ccenv-manifest` stores.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub plan: ResolutionPlan,
    pub entry_command: Option<String>,
    pub desktop_entries: Vec<String>,
}

/// One release's install-time view: a single version per package name plus
/// the Provides table, with the records kept for Filename/checksum fields.
#[derive(Debug)]
pub struct InstallIndex<'a> {
    pub release: String,
    by_name: BTreeMap<&'a str, &'a PackageRecord>,
    providers: BTreeMap<&'a str, BTreeSet<&'a str>>,
    pub diagnostics: Vec<String>,
}

impl<'a> InstallIndex<'a> {
    /// Index a record set; duplicate names keep the higher version with a
    /// diagnostic.
    pub fn new(release: impl Into<String>, records: &'a [PackageRecord]) -> Self {
        let release = release.into();
        let mut by_name: BTreeMap<&str, &PackageRecord> = BTreeMap::new();
        let mut diagnostics = Vec::new();
        for record in records {
            match by_name.get(record.name.as_str()) {
                Some(existing) if existing.version >= record.version => diagnostics.push(format!(
                    "{}: duplicate name `{}`, version {} shadowed by {}",
                    release, record.name, record.version, existing.version
                )),
                Some(existing) => {
                    diagnostics.push(format!(
                        "{}: duplicate name `{}`, version {} shadowed by {}",
                        release, record.name, existing.version, record.version
                    ));
                    by_name.insert(&record.name, record);
                }
                None => {
                    by_name.insert(&record.name, record);
                }
            }
        }
        let mut providers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for record in by_name.values() {
            for atom in &record.provides {
                providers
                    .entry(atom.package.as_str())
                    .or_default()
                    .insert(record.name.as_str());
            }
        }
        InstallIndex {
            release,
            by_name,
            providers,
            diagnostics,
        }
    }

    /// Index the snapshot of `release` as of `at` (the latest sampled date
    /// ≤ `at`; with `None`, the latest sampled date overall).
    pub fn from_snapshots(
        release: &str,
        snapshots: &'a [MirrorSnapshot],
        at: Option<NaiveDate>,
    ) -> Result<Self, WorkspaceError> {
        let chosen = snapshots
            .iter()
            .filter(|s| s.key.release == release)
            .filter(|s| at.is_none_or(|d| s.key.date <= d))
            .max_by_key(|s| s.key.date)
            .ok_or_else(|| WorkspaceError::NotFound {
                package: "<index>".to_string(),
                release: release.to_string(),
            })?;
        Ok(InstallIndex::new(release, &chosen.records))
    }

    pub fn record(&self, name: &str) -> Option<&'a PackageRecord> {
        self.by_name.get(name).copied()
    }

    pub fn providers_of(&self, name: &str) -> Option<&BTreeSet<&'a str>> {
        self.providers.get(name)
    }
}

/// Alternative-selection policy: `prefer` names win over the first-listed
/// default when a clause offers them.
#[derive(Debug, Clone, Default)]
pub struct ResolvePolicy {
    pub prefer: BTreeSet<String>,
}

/// Can `atom` be satisfied from the index, and by which package? Real
/// packages satisfy constraints against their index version; Provides
/// satisfies unversioned atoms only (first provider in name order wins).
fn resolvable_by<'a>(atom: &DependencyAtom, index: &InstallIndex<'a>) -> Option<&'a str> {
    if let Some(record) = index.record(&atom.package) {
        let ok = match &atom.constraint {
            Some(c) => satisfies(&record.version, c),
            None => true,
        };
        if ok {
            return Some(record.name.as_str());
        }
    }
    if atom.constraint.is_none() {
        if let Some(providers) = index.providers_of(&atom.package) {
            if let Some(first) = providers.iter().next() {
                return Some(first);
            }
        }
    }
    None
}

/// Is `atom` already satisfied by the pin set?
fn pinned_satisfier<'s>(
    atom: &DependencyAtom,
    pinned: &'s BTreeMap<String, DebVersion>,
    pinned_provides: &'s BTreeMap<String, BTreeSet<String>>,
) -> Option<&'s str> {
    if let Some(version) = pinned.get(&atom.package) {
        let ok = match &atom.constraint {
            Some(c) => satisfies(version, c),
            None => true,
        };
        if ok {
            return Some(pinned.get_key_value(&atom.package).unwrap().0);
        }
    }
    if atom.constraint.is_none() {
        if let Some(providers) = pinned_provides.get(&atom.package) {
            if let Some(first) = providers.iter().next() {
                return Some(first);
            }
        }
    }
    None
}

fn policy_order<'c>(
    clause: &'c DependencyClause,
    policy: &ResolvePolicy,
) -> Vec<&'c DependencyAtom> {
    let (preferred, rest): (Vec<&DependencyAtom>, Vec<&DependencyAtom>) = clause
        .alternatives
        .iter()
        .partition(|a| policy.prefer.contains(&a.package));
    preferred.into_iter().chain(rest).collect()
}

/// Breadth-first closure over Depends and Pre-Depends. For each clause the
/// first alternative resolvable in the index is pinned (policy-overridable);
/// the local system is never consulted. Clauses with no resolvable
/// alternative land in `unresolved` (all their atoms), and resolution
/// continues so the list is complete. Architecture restrictions on atoms are
/// ignored — the plan targets the index's own architecture.
pub fn resolve(
    package: &str,
    index: &InstallIndex<'_>,
    policy: &ResolvePolicy,
) -> Result<ResolutionPlan, WorkspaceError> {
    let root = index
        .record(package)
        .ok_or_else(|| WorkspaceError::NotFound {
            package: package.to_string(),
            release: index.release.clone(),
        })?;

    let mut order: Vec<String> = vec![root.name.clone()];
    let mut pinned: BTreeMap<String, DebVersion> =
        BTreeMap::from([(root.name.clone(), root.version.clone())]);
    let mut pinned_provides: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut depends_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut unresolved: Vec<String> = Vec::new();
    let mut queue: VecDeque<&PackageRecord> = VecDeque::from([root]);

    let register_provides =
        |record: &PackageRecord, pinned_provides: &mut BTreeMap<String, BTreeSet<String>>| {
            for atom in &record.provides {
                pinned_provides
                    .entry(atom.package.clone())
                    .or_default()
                    .insert(record.name.clone());
            }
        };
    register_provides(root, &mut pinned_provides);

    while let Some(record) = queue.pop_front() {
        let host = record.name.clone();
        for clause in record.pre_depends.iter().chain(record.depends.iter()) {
            if let Some(satisfier) = pinned_satisfier_clause(clause, &pinned, &pinned_provides) {
                depends_of.entry(host.clone()).or_default().insert(satisfier);
                continue;
            }
            let mut chosen: Option<&str> = None;
            for atom in policy_order(clause, policy) {
                if let Some(name) = resolvable_by(atom, index) {
                    chosen = Some(name);
                    break;
                }
            }
            match chosen {
                Some(name) => {
                    let dep = index.record(name).expect("resolvable name is indexed");
                    if !pinned.contains_key(name) {
                        pinned.insert(dep.name.clone(), dep.version.clone());
                        register_provides(dep, &mut pinned_provides);
                        order.push(dep.name.clone());
                        queue.push_back(dep);
                    }
                    depends_of
                        .entry(host.clone())
                        .or_default()
                        .insert(dep.name.clone());
                }
                None => {
                    for atom in &clause.alternatives {
                        let rendered = atom.to_string();
                        if !unresolved.contains(&rendered) {
                            unresolved.push(rendered);
                        }
                    }
                }
            }
        }
    }

    let pins = order
        .iter()
        .map(|name| {
            let record = index.record(name).expect("pinned name is indexed");
            Pin {
                name: record.name.clone(),
                version: record.version.clone(),
                release: index.release.clone(),
                mirror_path: record.filename.clone().unwrap_or_default(),
                sha256: record.sha256.clone(),
                size: record.size,
                depends: depends_of
                    .remove(name)
                    .map(|set| {
                        set.into_iter()
                            .filter(|dep| dep != name) // self-satisfaction isn't an edge
                            .collect()
                    })
                    .unwrap_or_default(),
            }
        })
        .collect();

    Ok(ResolutionPlan {
        root_package: root.name.clone(),
        target_release: index.release.clone(),
        pins,
        unresolved,
    })
}

fn pinned_satisfier_clause(
    clause: &DependencyClause,
    pinned: &BTreeMap<String, DebVersion>,
    pinned_provides: &BTreeMap<String, BTreeSet<String>>,
) -> Option<String> {
    clause
        .alternatives
        .iter()
        .find_map(|atom| pinned_satisfier(atom, pinned, pinned_provides).map(str::to_string))
}

/// Independent closure checker: re-derives satisfaction of every clause of
/// every pin from the pin set alone (names, versions, and pinned Provides),
/// without resolver bookkeeping. Returns `package: clause` lines for
/// anything unsatisfied.
pub fn check_closure(plan: &ResolutionPlan, index: &InstallIndex<'_>) -> Vec<String> {
    let mut versions: BTreeMap<&str, &DebVersion> = BTreeMap::new();
    let mut provided: BTreeSet<&str> = BTreeSet::new();
    for pin in &plan.pins {
        versions.insert(&pin.name, &pin.version);
        if let Some(record) = index.record(&pin.name) {
            for atom in &record.provides {
                provided.insert(&atom.package);
            }
        }
    }
    let atom_ok = |atom: &DependencyAtom| -> bool {
        if let Some(version) = versions.get(atom.package.as_str()) {
            match &atom.constraint {
                Some(c) => {
                    if satisfies(version, c) {
                        return true;
                    }
                }
                None => return true,
            }
        }
        atom.constraint.is_none() && provided.contains(atom.package.as_str())
    };
    let mut failures = Vec::new();
    for pin in &plan.pins {
        let Some(record) = index.record(&pin.name) else {
            failures.push(format!("{}: not present in index", pin.name));
            continue;
        };
        if record.version != pin.version {
            failures.push(format!(
                "{}: pinned {} but index holds {}",
                pin.name, pin.version, record.version
            ));
        }
        for clause in record.pre_depends.iter().chain(record.depends.iter()) {
            if !clause.alternatives.iter().any(atom_ok) {
                failures.push(format!("{}: {}", pin.name, clause));
            }
        }
    }
    failures
}

fn fetch_pin_bytes(pin: &Pin, mirror_base: &str) -> Result<Vec<u8>, WorkspaceError> {
    if pin.mirror_path.is_empty() {
        return Err(WorkspaceError::Download {
            pin: pin.name.clone(),
            reason: "no Filename field in the index".to_string(),
        });
    }
    if mirror_base.starts_with("http://") || mirror_base.starts_with("https://") {
        let url = format!(
            "{}/{}",
            mirror_base.trim_end_matches('/'),
            pin.mirror_path
        );
        let response = reqwest::blocking::get(&url).map_err(|e| WorkspaceError::Download {
            pin: pin.name.clone(),
            reason: format!("{url}: {e}"),
        })?;
        if !response.status().is_success() {
            return Err(WorkspaceError::Download {
                pin: pin.name.clone(),
                reason: format!("{url}: HTTP {}", response.status()),
            });
        }
        response
            .bytes()
            .map(|b| b.to_vec())
            .map_err(|e| WorkspaceError::Download {
                pin: pin.name.clone(),
                reason: format!("{url}: {e}"),
            })
    } else {
        let path = Path::new(mirror_base).join(&pin.mirror_path);
        std::fs::read(&path).map_err(|e| WorkspaceError::Download {
            pin: pin.name.clone(),
            reason: format!("{}: {e}", path.display()),
        })
    }
}

fn verify_pin(pin: &Pin, bytes: &[u8]) -> Result<String, WorkspaceError> {
    if let Some(size) = pin.size {
        if bytes.len() as u64 != size {
            return Err(WorkspaceError::CorruptArtifact {
                pin: pin.name.clone(),
                reason: format!("size {} != index size {size}", bytes.len()),
            });
        }
    }
    let digest = sha256_hex(bytes);
    if let Some(expected) = &pin.sha256 {
        if &digest != expected {
            return Err(WorkspaceError::CorruptArtifact {
                pin: pin.name.clone(),
                reason: format!("sha256 {digest} != index sha256 {expected}"),
            });
        }
    }
    Ok(digest)
}

const DEB_NAMESPACE: &str = "debs";

fn download_one(
    pin: &Pin,
    mirror_base: &str,
    cache: &BlobCache,
) -> Result<PathBuf, WorkspaceError> {
    let key = format!("{}/{}", pin.release, pin.mirror_path);
    if let Some(digest) = cache.get_sidecar::<String>(DEB_NAMESPACE, &key)? {
        let expected_ok = pin.sha256.as_ref().is_none_or(|s| s == &digest);
        if expected_ok {
            if let Some(path) = cache.blob_file(&digest)? {
                return Ok(path);
            }
        }
        cache.remove_sidecar(DEB_NAMESPACE, &key)?;
    }
    let bytes = fetch_pin_bytes(pin, mirror_base)?;
    let digest = verify_pin(pin, &bytes)?;
    let stored = cache.put_blob(&bytes)?;
    debug_assert_eq!(stored, digest);
    cache.put_sidecar(DEB_NAMESPACE, &key, &digest)?;
    cache
        .blob_file(&digest)?
        .ok_or_else(|| WorkspaceError::Download {
            pin: pin.name.clone(),
            reason: "blob vanished after store".to_string(),
        })
}

/// Download every pin's archive, verifying Size/SHA256 against the index
/// fields and caching by content. A warm cache costs zero fetches. Returns
/// local file paths in pin order; any per-pin failure aborts the plan before
/// anything is installed.
pub fn download(
    plan: &ResolutionPlan,
    mirror_base: &str,
    cache: &BlobCache,
) -> Result<Vec<PathBuf>, WorkspaceError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        plan.pins
            .par_iter()
            .map(|pin| download_one(pin, mirror_base, cache))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        plan.pins
            .iter()
            .map(|pin| download_one(pin, mirror_base, cache))
            .collect()
    }
}

/// Sequential twin of [`download`].
pub fn download_seq(
    plan: &ResolutionPlan,
    mirror_base: &str,
    cache: &BlobCache,
) -> Result<Vec<PathBuf>, WorkspaceError> {
    plan.pins
        .iter()
        .map(|pin| download_one(pin, mirror_base, cache))
        .collect()
}

/// Everything `install` needs beyond the plan itself.
#[derive(Debug, Clone, Copy)]
pub struct InstallOptions<'a> {
    /// Mirror base: a local directory or an http(s) URL.
    pub mirror_base: &'a str,
    pub cache: &'a BlobCache,
    /// Workspace root to create; must not already contain files.
    pub dest: &'a Path,
    /// Index snapshot date, recorded as the SBOM creation timestamp.
    pub as_of: NaiveDate,
}

fn io_err(path: &Path, source: std::io::Error) -> WorkspaceError {
    WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_empty_dir(dest: &Path) -> Result<(), WorkspaceError> {
    if dest.exists() {
        let mut entries = std::fs::read_dir(dest).map_err(|e| io_err(dest, e))?;
        if entries.next().is_some() {
            return Err(WorkspaceError::DestNotEmpty(dest.to_path_buf()));
        }
    } else {
        std::fs::create_dir_all(dest).map_err(|e| io_err(dest, e))?;
    }
    Ok(())
}

/// Extract downloaded archives and synthesize launcher, SBOM, and manifest.
/// Shared by fresh installs and SBOM replays.
fn materialize(
    plan: ResolutionPlan,
    archives: Vec<PathBuf>,
    dest: &Path,
    created: &str,
) -> Result<Workspace, WorkspaceError> {
    ensure_empty_dir(dest)?;
    let outcome = (|| -> Result<Workspace, WorkspaceError> {
        for (pin, file) in plan.pins.iter().zip(&archives) {
            let bytes = std::fs::read(file).map_err(|e| io_err(file, e))?;
            let control = deb_control(&bytes)?;
            let (paragraphs, _) = crate::control::parse_paragraphs(&control);
            let stanza_ok = paragraphs.first().is_some_and(|p| {
                p.get("Package").is_some_and(|n| n == pin.name)
                    && p.get("Version").is_some_and(|v| {
                        v.parse::<DebVersion>()
                            .map(|v| v == pin.version)
                            .unwrap_or(false)
                    })
            });
            if !stanza_ok {
                return Err(WorkspaceError::CorruptArtifact {
                    pin: pin.name.clone(),
                    reason: "control stanza does not match the pinned name/version".to_string(),
                });
            }
            extract_archive(&bytes, dest)?;
        }

        let desktop_entries = find_desktop_entries(dest)?;
        let mut entry_command = None;
        for path in &desktop_entries {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            if let Ok(entry) = parse_desktop_entry(&text) {
                if let Some(exec) = entry.exec {
                    if !exec.is_empty() {
                        entry_command = Some(exec);
                        break;
                    }
                }
            }
        }
        if entry_command.is_none() {
            for bin_dir in ["usr/bin", "bin", "usr/sbin", "sbin"] {
                if dest.join(bin_dir).join(&plan.root_package).is_file() {
                    entry_command = Some(plan.root_package.clone());
                    break;
                }
            }
        }

        let launcher = create_environment(dest, entry_command.as_deref())?;
        let sbom_path = dest.join(SBOM_FILE);
        emit_sbom(&plan, created, &sbom_path)?;
        let manifest = Manifest {
            tool: ToolInfo::default(),
            plan: plan.clone(),
            entry_command: entry_command.clone(),
            desktop_entries: desktop_entries
                .iter()
                .map(|p| {
                    p.strip_prefix(dest)
                        .unwrap_or(p)
                        .to_string_lossy()
                        .into_owned()
                })
                .collect(),
        };
        let manifest_path = dest.join(MANIFEST_FILE);
        let mut manifest_json =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        manifest_json.push('\n');
        std::fs::write(&manifest_path, manifest_json).map_err(|e| io_err(&manifest_path, e))?;

        Ok(Workspace {
            root_dir: dest.to_path_buf(),
            plan,
            launcher,
            sbom: sbom_path,
            entry_command,
            desktop_entries,
        })
    })();
    if outcome.is_err() {
        // Leave no half-built workspace behind; dest was empty before us.
        let _ = std::fs::remove_dir_all(dest);
    }
    outcome
}

/// End-to-end install: resolve the closure, download, extract, create the
/// launcher, emit the SBOM, and drop the workspace marker.
pub fn install(
    package: &str,
    index: &InstallIndex<'_>,
    policy: &ResolvePolicy,
    opts: InstallOptions<'_>,
) -> Result<Workspace, WorkspaceError> {
    let plan = resolve(package, index, policy)?;
    plan.require_complete()?;
    let archives = download(&plan, opts.mirror_base, opts.cache)?;
    materialize(
        plan,
        archives,
        opts.dest,
        &opts.as_of.format("%Y-%m-%d").to_string(),
    )
}

/// Replay an SBOM: pins are installed exactly as recorded, no resolution.
/// The reproduced workspace has an identical file-tree digest.
pub fn install_from_sbom(
    sbom: &Sbom,
    mirror_base: &str,
    cache: &BlobCache,
    dest: &Path,
) -> Result<Workspace, WorkspaceError> {
    let plan = sbom.to_plan()?;
    let archives = download(&plan, mirror_base, cache)?;
    materialize(plan, archives, dest, &sbom.created)
}

/// Load the manifest of an existing workspace.
pub fn read_manifest(root: &Path) -> Result<Manifest, WorkspaceError> {
    let path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| WorkspaceError::BadManifest {
        reason: e.to_string(),
    })
}

/// Delete a workspace. Refuses paths without the marker file; a missing
/// path is already-removed (idempotent success).
pub fn remove_workspace(root: &Path) -> Result<(), WorkspaceError> {
    if !root.exists() {
        return Ok(());
    }
    if !root.join(MANIFEST_FILE).is_file() {
        return Err(WorkspaceError::NotAWorkspace(root.to_path_buf()));
    }
    std::fs::remove_dir_all(root).map_err(|e| io_err(root, e))
}

/// Content digest of a file tree: hashes every path (sorted), entry kind,
/// the executable bit and contents of files, and symlink targets. Directory
/// modes and timestamps are excluded so the digest is stable across hosts.
pub fn tree_digest(root: &Path) -> Result<String, WorkspaceError> {
    use sha2::{Digest, Sha256};
    fn walk(
        root: &Path,
        dir: &Path,
        hasher: &mut sha2::Sha256,
    ) -> Result<(), WorkspaceError> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io_err(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            let rel = path.strip_prefix(root).expect("child of root");
            let meta = std::fs::symlink_metadata(&path).map_err(|e| io_err(&path, e))?;
            use sha2::Digest;
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0]);
            if meta.file_type().is_symlink() {
                let target = std::fs::read_link(&path).map_err(|e| io_err(&path, e))?;
                hasher.update(b"l");
                hasher.update(target.to_string_lossy().as_bytes());
            } else if meta.is_dir() {
                hasher.update(b"d");
                walk(root, &path, hasher)?;
            } else {
                hasher.update(b"f");
                #[cfg(unix)]
                {
                    use std::os::unix::fs::PermissionsExt;
                    let exec = meta.permissions().mode() & 0o111 != 0;
                    hasher.update([exec as u8]);
                }
                let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
                hasher.update((bytes.len() as u64).to_be_bytes());
                hasher.update(&bytes);
            }
            hasher.update([0xff]);
        }
        Ok(())
    }
    let mut hasher = Sha256::new();
    if root.is_dir() {
        walk(root, root, &mut hasher)?;
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[cfg(test)]
mod tests;
