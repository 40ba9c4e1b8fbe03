//! Core library for analysing Debian package snapshots over time and for
//! installing packages into isolated, disposable workspaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`version`] — Debian version parsing, ordering and constraint checks.
//! * [`control`] — RFC-822 style control/Packages parsing and rendering.
//! * [`cache`] — content-addressed blob cache shared by all downloaders.
//! * [`snapshot`] — acquisition of dated Packages indices from a snapshot
//!   archive or a local corpus.
//! * [`graph`] — the evolutionary dependency graph built from a series of
//!   dated snapshots, with package- and project-level views.
//! * [`compat`] — cross-release compatibility analysis and reason
//!   classification.
//! * [`vuln`] — CVE ingestion, graph annotation, propagation and fix-lag
//!   analytics.
//! * [`workspace`] — resolution, download, safe extraction and launcher
//!   generation for isolated package workspaces.

pub mod cache;
pub mod compat;
pub mod control;
pub mod graph;
pub mod snapshot;
pub mod version;
pub mod vuln;
pub mod workspace;
