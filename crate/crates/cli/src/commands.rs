//! Subcommand implementations. Each handler takes the effective
//! configuration plus its own arguments and returns an operation result;
//! usage validation stays in the clap layer.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;

use ccenv_core::cache::BlobCache;
use ccenv_core::compat::{
    incompat_matrix, project_diff, write_matrix_reports, ReleaseInventory,
};
use ccenv_core::graph::{build_graph, export_graph, EDGraph, ExportFormat};
use ccenv_core::snapshot::{fetch_index, load_local_mirror, LocalMirror, SnapshotKey};
use ccenv_core::vuln::{
    annotate_graph, apply_publish_dates, fix_lag_report, ingest_cves, ingest_vuln_list,
    load_milestones, load_publish_dates, open_fixed_counts, propagation, write_lag_csv,
    write_open_fixed_csv, write_propagation_by_severity_csv, write_propagation_by_status_csv,
    AnnotationKind, CveRecord, MilestoneTable, VulnAnnotations,
};
use ccenv_core::workspace::{
    install, read_manifest, read_sbom, remove_workspace, InstallIndex, InstallOptions,
    ResolvePolicy, LAUNCHER_FILE, SBOM_FILE,
};

use crate::config::{CliConfig, OutputFormat};

/// CVE input selection shared by the `vuln` subcommands.
pub struct VulnSource {
    pub feed: Option<PathBuf>,
    pub vuln_dir: Option<PathBuf>,
    pub publish_dates: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn print_table(headers: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let render = |cells: Vec<&str>| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{:<width$}", cell, width = widths[i]));
        }
        println!("{}", line.trim_end());
    };
    render(headers.to_vec());
    for row in rows {
        render(row.iter().map(String::as_str).collect());
    }
}

/// Print one result table to stdout in the configured format. JSON output is
/// an array of objects keyed by the headers; all values stay strings so the
/// three formats carry identical content.
fn emit(format: OutputFormat, headers: &[&str], rows: Vec<Vec<String>>) {
    match format {
        OutputFormat::Table => print_table(headers, &rows),
        OutputFormat::Csv => {
            println!("{}", headers.join(","));
            for row in rows {
                println!("{}", row.join(","));
            }
        }
        OutputFormat::Json => {
            let array: Vec<serde_json::Value> = rows
                .into_iter()
                .map(|row| {
                    headers
                        .iter()
                        .zip(row)
                        .map(|(h, cell)| ((*h).to_string(), serde_json::Value::String(cell)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&array).expect("string table serializes")
            );
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared loading steps
// ---------------------------------------------------------------------------

fn require_corpus(cfg: &CliConfig) -> Result<&Path> {
    cfg.corpus
        .as_deref()
        .context("no corpus configured; pass --corpus DIR (or set `corpus` in the config file)")
}

fn load_corpus(cfg: &CliConfig) -> Result<LocalMirror> {
    let root = require_corpus(cfg)?;
    let mirror = load_local_mirror(root, None)
        .with_context(|| format!("loading corpus {}", root.display()))?;
    for diag in &mirror.layout_diagnostics {
        eprintln!("ccenv: corpus: {diag}");
    }
    if mirror.snapshots.is_empty() {
        bail!("corpus {} contains no snapshots", root.display());
    }
    Ok(mirror)
}

fn corpus_graph(cfg: &CliConfig) -> Result<EDGraph> {
    let mirror = load_corpus(cfg)?;
    Ok(build_graph(&mirror.snapshots)?)
}

fn effective_release(cfg: &CliConfig, flag: Option<String>) -> Result<String> {
    flag.or_else(|| cfg.release.clone())
        .context("no release given; pass --release CODENAME (or set `release` in the config file)")
}

fn vuln_records(source: &VulnSource) -> Result<Vec<CveRecord>> {
    let ingest = match (&source.feed, &source.vuln_dir) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading feed {}", path.display()))?;
            ingest_cves(&text)?
        }
        (None, Some(dir)) => ingest_vuln_list(dir)?,
        _ => bail!("pass exactly one of --feed FILE or --vuln-dir DIR"),
    };
    for diag in &ingest.diagnostics {
        eprintln!("ccenv: feed: {diag}");
    }
    let mut records = ingest.records;
    if let Some(path) = &source.publish_dates {
        let table = load_publish_dates(path)?;
        apply_publish_dates(&mut records, &table);
    }
    Ok(records)
}

fn annotated(cfg: &CliConfig, source: &VulnSource) -> Result<(EDGraph, VulnAnnotations)> {
    let records = vuln_records(source)?;
    let graph = corpus_graph(cfg)?;
    let annotations = annotate_graph(&graph, &records);
    for diag in &annotations.diagnostics {
        eprintln!("ccenv: vuln: {diag}");
    }
    Ok((graph, annotations))
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

pub fn fetch(
    cfg: &CliConfig,
    release: Option<String>,
    from: NaiveDate,
    to: Option<NaiveDate>,
) -> Result<()> {
    let release = effective_release(cfg, release)?;
    let base = cfg.snapshot_url.as_deref().context(
        "no snapshot archive configured; pass --snapshot-url URL (or set CCENV_SNAPSHOT_URL)",
    )?;
    let to = to.unwrap_or(from);
    if to < from {
        bail!("--to {to} precedes --from {from}");
    }
    let cache = BlobCache::new(&cfg.cache);
    let mut date = from;
    let mut failures = 0usize;
    let mut total = 0usize;
    while date <= to {
        total += 1;
        let mut key = SnapshotKey::new(release.clone(), date);
        key.architecture = cfg.architecture.clone();
        match fetch_index(&key, base, &cache, None) {
            Ok(snapshot) => println!(
                "{release} {date}: {} packages ({})",
                snapshot.records.len(),
                snapshot.source
            ),
            Err(err) => {
                failures += 1;
                eprintln!("ccenv: fetch {release} {date}: {err}");
            }
        }
        date += chrono::Duration::days(1);
    }
    if failures > 0 {
        bail!("{failures} of {total} fetches failed");
    }
    Ok(())
}

pub fn graph_build(cfg: &CliConfig) -> Result<()> {
    let graph = corpus_graph(cfg)?;
    let mut rows = Vec::new();
    for (release, rg) in &graph.releases {
        let names: BTreeSet<&str> = rg.nodes().iter().map(|n| n.name.as_str()).collect();
        rows.push(vec![
            release.clone(),
            rg.dates.len().to_string(),
            names.len().to_string(),
            rg.nodes().len().to_string(),
            rg.projects.len().to_string(),
            rg.edges.len().to_string(),
            rg.project_edges.len().to_string(),
        ]);
    }
    emit(
        cfg.format,
        &[
            "release",
            "snapshots",
            "packages",
            "nodes",
            "projects",
            "edges",
            "project_edges",
        ],
        rows,
    );
    if !graph.diagnostics.is_empty() {
        eprintln!("ccenv: {} graph diagnostics:", graph.diagnostics.len());
        for diag in &graph.diagnostics {
            eprintln!("  {diag}");
        }
    }
    Ok(())
}

pub fn graph_export(cfg: &CliConfig, out: &Path) -> Result<()> {
    let graph = corpus_graph(cfg)?;
    let format = match cfg.format {
        OutputFormat::Json => ExportFormat::Jsonl,
        _ => ExportFormat::Csv,
    };
    for file in export_graph(&graph, format, out)? {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

pub fn diff(cfg: &CliConfig, from: &str, to: &str, out: Option<&Path>) -> Result<()> {
    let graph = corpus_graph(cfg)?;
    let a = ReleaseInventory::from_graph(&graph, from, None)?;
    let b = ReleaseInventory::from_graph(&graph, to, None)?;
    let diff = project_diff(&a, &b);
    if cfg.format == OutputFormat::Table {
        println!(
            "projects {from} → {to}: {} added, {} removed, {} common",
            diff.added.len(),
            diff.removed.len(),
            diff.common.len()
        );
    }
    let mut rows = Vec::new();
    for project in &diff.added {
        rows.push(vec!["added".to_string(), project.clone()]);
    }
    for project in &diff.removed {
        rows.push(vec!["removed".to_string(), project.clone()]);
    }
    emit(cfg.format, &["status", "project"], rows);
    if let Some(path) = out {
        let mut text = String::from("status,project\n");
        for (status, set) in [
            ("added", &diff.added),
            ("removed", &diff.removed),
            ("common", &diff.common),
        ] {
            for project in set {
                text.push_str(&format!("{status},{project}\n"));
            }
        }
        write_file(path, &text)?;
    }
    Ok(())
}

pub fn incompat(
    cfg: &CliConfig,
    from: Option<&str>,
    to: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let graph = corpus_graph(cfg)?;
    let mut inventories = Vec::new();
    for release in graph.releases.keys() {
        inventories.push(ReleaseInventory::from_graph(&graph, release, None)?);
    }
    let matrix = incompat_matrix(&inventories)?;
    match (from, to) {
        (Some(a), Some(b)) => {
            let cell = matrix.cell(a, b).with_context(|| {
                format!(
                    "no matrix cell for {a} → {b} (releases: {})",
                    matrix.releases.join(", ")
                )
            })?;
            if cfg.format == OutputFormat::Table {
                println!(
                    "{a} → {b}: {} incompatible projects, {} findings",
                    cell.incompatible_projects.len(),
                    cell.finding_count
                );
                if !cell.incompatible_projects.is_empty() {
                    let list: Vec<&str> = cell
                        .incompatible_projects
                        .iter()
                        .map(String::as_str)
                        .collect();
                    println!("projects: {}", list.join(" "));
                }
            }
            let rows = cell
                .reason_findings
                .iter()
                .map(|(reason, findings)| {
                    vec![
                        reason.clone(),
                        findings.to_string(),
                        cell.reason_projects
                            .get(reason)
                            .copied()
                            .unwrap_or(0)
                            .to_string(),
                    ]
                })
                .collect();
            emit(cfg.format, &["reason", "findings", "projects"], rows);
        }
        _ => {
            if cfg.format == OutputFormat::Table {
                let mut headers = vec!["A\\B"];
                headers.extend(matrix.releases.iter().map(String::as_str));
                let mut grid = Vec::new();
                for a in &matrix.releases {
                    let mut row = vec![a.clone()];
                    for b in &matrix.releases {
                        row.push(if a == b {
                            "-".to_string()
                        } else {
                            matrix
                                .cell(a, b)
                                .map(|c| c.incompatible_projects.len().to_string())
                                .unwrap_or_default()
                        });
                    }
                    grid.push(row);
                }
                println!("incompatible projects per ordered pair (row = target A, column = dependent B):");
                print_table(&headers, &grid);
                println!();
                let mut totals: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
                for ((a, b), cell) in &matrix.cells {
                    if a == b {
                        continue;
                    }
                    for (reason, n) in &cell.reason_findings {
                        totals.entry(reason).or_default().0 += n;
                    }
                    for (reason, n) in &cell.reason_projects {
                        totals.entry(reason).or_default().1 += n;
                    }
                }
                println!("reason histogram over all pairs:");
                let rows = totals
                    .into_iter()
                    .map(|(reason, (findings, projects))| {
                        vec![
                            reason.to_string(),
                            findings.to_string(),
                            projects.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>();
                print_table(&["reason", "findings", "project_hits"], &rows);
            } else {
                let rows = matrix
                    .cells
                    .iter()
                    .map(|((a, b), cell)| {
                        vec![
                            a.clone(),
                            b.clone(),
                            cell.incompatible_projects.len().to_string(),
                            cell.finding_count.to_string(),
                        ]
                    })
                    .collect();
                emit(
                    cfg.format,
                    &["release_a", "release_b", "incompatible_projects", "findings"],
                    rows,
                );
            }
        }
    }
    if let Some(dir) = out {
        for file in write_matrix_reports(&matrix, dir)? {
            eprintln!("wrote {}", file.display());
        }
    }
    Ok(())
}

pub fn vuln_annotate(cfg: &CliConfig, source: &VulnSource, out: Option<&Path>) -> Result<()> {
    let (graph, annotations) = annotated(cfg, source)?;
    let mut rows = Vec::new();
    for release in graph.releases.keys() {
        let (open, fixed) = open_fixed_counts(&annotations, release);
        let count = annotations.for_release(release).count();
        rows.push(vec![
            release.clone(),
            open.to_string(),
            fixed.to_string(),
            count.to_string(),
        ]);
    }
    emit(cfg.format, &["release", "open", "fixed", "annotations"], rows);
    if cfg.format == OutputFormat::Table {
        if annotations.unmatched.is_empty() {
            println!("unmatched: none");
        } else {
            println!("unmatched: {}", annotations.unmatched.join(", "));
        }
    }
    if let Some(path) = out {
        let text = match cfg.format {
            OutputFormat::Json => {
                let mut text = String::new();
                for annotation in &annotations.annotations {
                    text.push_str(
                        &serde_json::to_string(annotation).expect("annotation serializes"),
                    );
                    text.push('\n');
                }
                text
            }
            _ => {
                let mut text = String::from("cve,release,project,package,version,kind\n");
                for a in &annotations.annotations {
                    let kind = match a.kind {
                        AnnotationKind::VulnerablePoint => "vulnerable",
                        AnnotationKind::FixedPoint => "fixed",
                    };
                    text.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        a.cve, a.release, a.project, a.package, a.version, kind
                    ));
                }
                text
            }
        };
        write_file(path, &text)?;
    }
    Ok(())
}

pub fn vuln_report(cfg: &CliConfig, source: &VulnSource, out: Option<&Path>) -> Result<()> {
    let (graph, annotations) = annotated(cfg, source)?;
    let releases: Vec<String> = graph.releases.keys().cloned().collect();
    let mut rows = Vec::new();
    for release in &releases {
        for (label, fixed) in [("open", false), ("fixed", true)] {
            let restricted = annotations.restrict_to_status(release, fixed);
            let report = propagation(&graph, &restricted, release, None)?;
            rows.push(vec![
                release.clone(),
                label.to_string(),
                report.original.len().to_string(),
                report.transitive_only.len().to_string(),
                report.union_count().to_string(),
                report.total_projects.to_string(),
                format!("{:.2}", report.pct_union()),
            ]);
        }
    }
    emit(
        cfg.format,
        &[
            "release",
            "status",
            "original",
            "transitive_only",
            "union",
            "total_projects",
            "pct_union",
        ],
        rows,
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let open_fixed = dir.join("open_fixed.csv");
        write_open_fixed_csv(&annotations, &releases, &open_fixed)?;
        let by_status = dir.join("propagation_by_status.csv");
        write_propagation_by_status_csv(&graph, &annotations, &releases, &by_status)?;
        let by_severity = dir.join("propagation_by_severity.csv");
        write_propagation_by_severity_csv(&graph, &annotations, &releases, &by_severity)?;
        for path in [open_fixed, by_status, by_severity] {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn vuln_lag(cfg: &CliConfig, source: &VulnSource, out: Option<&Path>) -> Result<()> {
    let (graph, annotations) = annotated(cfg, source)?;
    let milestones: MilestoneTable = match &cfg.milestones {
        Some(path) => load_milestones(path)?,
        None => {
            eprintln!(
                "ccenv: no milestone table configured; lifecycle stages will be empty (pass --milestones FILE)"
            );
            MilestoneTable::new()
        }
    };
    let releases: Vec<String> = graph.releases.keys().cloned().collect();
    let fmt_mean = |m: Option<f64>| m.map(|v| format!("{v:.1}")).unwrap_or_default();
    let mut rows = Vec::new();
    for release in &releases {
        let report = fix_lag_report(&graph, &annotations, release, milestones.get(release.as_str()));
        rows.push(vec![
            release.clone(),
            report.lagged.len().to_string(),
            fmt_mean(report.mean_lag_days()),
            report.fixed_before_publication.len().to_string(),
            report.not_computable.len().to_string(),
        ]);
    }
    emit(
        cfg.format,
        &[
            "release",
            "lagged",
            "mean_lag_days",
            "fixed_before_publication",
            "not_computable",
        ],
        rows,
    );
    if let Some(path) = out {
        write_lag_csv(&graph, &annotations, &releases, &milestones, path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn install_cmd(
    cfg: &CliConfig,
    package: &str,
    release: Option<String>,
    date: Option<NaiveDate>,
    dest: Option<PathBuf>,
    prefer: Vec<String>,
) -> Result<()> {
    let release = effective_release(cfg, release)?;
    let corpus = require_corpus(cfg)?;
    let mirror = load_corpus(cfg)?;
    let index = InstallIndex::from_snapshots(&release, &mirror.snapshots, date)?;
    for diag in &index.diagnostics {
        eprintln!("ccenv: index: {diag}");
    }
    let as_of = mirror
        .snapshots
        .iter()
        .filter(|s| s.key.release == release)
        .filter(|s| date.is_none_or(|d| s.key.date <= d))
        .map(|s| s.key.date)
        .max()
        .expect("index construction succeeded, so a snapshot matched");
    let dest = dest.unwrap_or_else(|| PathBuf::from(format!("{package}-{release}")));
    let mirror_base = cfg
        .mirror
        .clone()
        .unwrap_or_else(|| corpus.display().to_string());
    let cache = BlobCache::new(&cfg.cache);
    let policy = ResolvePolicy {
        prefer: prefer.into_iter().collect(),
    };
    let workspace = install(
        package,
        &index,
        &policy,
        InstallOptions {
            mirror_base: &mirror_base,
            cache: &cache,
            dest: &dest,
            as_of,
        },
    )?;
    let rows = workspace
        .plan
        .pins
        .iter()
        .map(|pin| vec![pin.name.clone(), pin.version.to_string()])
        .collect();
    emit(cfg.format, &["package", "version"], rows);
    println!("workspace: {}", workspace.root_dir.display());
    println!(
        "entry command: {}",
        workspace.entry_command.as_deref().unwrap_or("(none)")
    );
    println!("launcher: {}", workspace.launcher.display());
    println!("sbom: {}", workspace.sbom.display());
    Ok(())
}

pub fn run_workspace(workspace: &Path, args: &[OsString]) -> Result<()> {
    read_manifest(workspace)
        .with_context(|| format!("{} is not a usable ccenv workspace", workspace.display()))?;
    let launcher = workspace.join(LAUNCHER_FILE);
    let status = std::process::Command::new("/bin/sh")
        .arg(&launcher)
        .args(args)
        .status()
        .with_context(|| format!("running {}", launcher.display()))?;
    // The launcher's exit code is the command's exit code.
    std::process::exit(status.code().unwrap_or(1));
}

pub fn sbom_cmd(cfg: &CliConfig, workspace: &Path, out: Option<&Path>) -> Result<()> {
    let path = workspace.join(SBOM_FILE);
    let sbom = read_sbom(&path)?;
    if let Some(target) = out {
        write_file(target, &sbom.to_json())?;
        return Ok(());
    }
    if cfg.format == OutputFormat::Table {
        println!("root: {} ({})", sbom.root_package, sbom.release);
        println!("created: {}", sbom.created);
    }
    let rows = sbom
        .components
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.version.clone(),
                c.release.clone(),
                c.sha256.clone().unwrap_or_default(),
            ]
        })
        .collect();
    emit(cfg.format, &["component", "version", "release", "sha256"], rows);
    Ok(())
}

pub fn remove_cmd(workspace: &Path) -> Result<()> {
    remove_workspace(workspace)?;
    println!("removed {}", workspace.display());
    Ok(())
}
