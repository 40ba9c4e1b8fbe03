//! Effective CLI configuration: command-line flags override environment
//! variables, which override the config file, which overrides built-in
//! defaults. The file is a plain `key = value` format.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const ENV_CACHE: &str = "CCENV_CACHE";
pub const ENV_MIRROR: &str = "CCENV_MIRROR";
pub const ENV_SNAPSHOT_URL: &str = "CCENV_SNAPSHOT_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    /// Human-readable columns on standard output.
    Table,
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Raw values read from one config file.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub cache: Option<PathBuf>,
    pub mirror: Option<String>,
    pub snapshot_url: Option<String>,
    pub corpus: Option<PathBuf>,
    pub milestones: Option<PathBuf>,
    pub release: Option<String>,
    pub architecture: Option<String>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = FileConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    origin.display(),
                    lineno + 1
                );
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            match key {
                "cache" => cfg.cache = Some(PathBuf::from(value)),
                "mirror" => cfg.mirror = Some(value),
                "snapshot_url" => cfg.snapshot_url = Some(value),
                "corpus" => cfg.corpus = Some(PathBuf::from(value)),
                "milestones" => cfg.milestones = Some(PathBuf::from(value)),
                "release" => cfg.release = Some(value),
                "architecture" => cfg.architecture = Some(value),
                "format" => {
                    cfg.format = Some(match value.as_str() {
                        "table" => OutputFormat::Table,
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        other => bail!(
                            "{}:{}: unknown format `{other}` (expected table, csv, or json)",
                            origin.display(),
                            lineno + 1
                        ),
                    })
                }
                other => bail!(
                    "{}:{}: unknown key `{other}`",
                    origin.display(),
                    lineno + 1
                ),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text, path)
    }
}

/// The merged, effective configuration.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub cache: PathBuf,
    /// Package mirror: directory or http(s) URL serving `Filename:` paths.
    pub mirror: Option<String>,
    /// Dated snapshot archive base for `fetch`.
    pub snapshot_url: Option<String>,
    /// Local corpus of daily indices (`<release>/<date>/Packages*`).
    pub corpus: Option<PathBuf>,
    pub milestones: Option<PathBuf>,
    pub release: Option<String>,
    pub architecture: String,
    pub format: OutputFormat,
    pub jobs: Option<usize>,
}

/// The documented default config file location.
pub fn default_config_path() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("XDG_CONFIG_HOME") {
        if !dir.is_empty() {
            return Some(PathBuf::from(dir).join("ccenv/config"));
        }
    }
    std::env::var("HOME")
        .ok()
        .filter(|h| !h.is_empty())
        .map(|h| PathBuf::from(h).join(".config/ccenv/config"))
}

fn default_cache_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("XDG_CACHE_HOME") {
        if !dir.is_empty() {
            return PathBuf::from(dir).join("ccenv");
        }
    }
    match std::env::var("HOME") {
        Ok(home) if !home.is_empty() => PathBuf::from(home).join(".cache/ccenv"),
        _ => PathBuf::from(".ccenv-cache"),
    }
}

/// Values provided on the command line (with clap's `env` fallback already
/// applied, preserving the flags-over-environment order).
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub cache: Option<PathBuf>,
    pub mirror: Option<String>,
    pub snapshot_url: Option<String>,
    pub corpus: Option<PathBuf>,
    pub milestones: Option<PathBuf>,
    pub release: Option<String>,
    pub architecture: Option<String>,
    pub format: Option<OutputFormat>,
    pub jobs: Option<usize>,
}

impl CliConfig {
    pub fn resolve(overrides: Overrides, file: FileConfig) -> CliConfig {
        CliConfig {
            cache: overrides
                .cache
                .or(file.cache)
                .unwrap_or_else(default_cache_dir),
            mirror: overrides.mirror.or(file.mirror),
            snapshot_url: overrides.snapshot_url.or(file.snapshot_url),
            corpus: overrides.corpus.or(file.corpus),
            milestones: overrides.milestones.or(file.milestones),
            release: overrides.release.or(file.release),
            architecture: overrides
                .architecture
                .or(file.architecture)
                .unwrap_or_else(|| "amd64".to_string()),
            format: overrides.format.or(file.format).unwrap_or(OutputFormat::Table),
            jobs: overrides.jobs,
        }
    }

    /// `config show` body: one stable `key = value` line per setting.
    pub fn render(&self) -> String {
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "(unset)".to_string())
        };
        let opt_str =
            |s: &Option<String>| s.clone().unwrap_or_else(|| "(unset)".to_string());
        format!(
            "cache = {}\nmirror = {}\nsnapshot_url = {}\ncorpus = {}\nmilestones = {}\nrelease = {}\narchitecture = {}\nformat = {}\njobs = {}\n",
            self.cache.display(),
            opt_str(&self.mirror),
            opt_str(&self.snapshot_url),
            opt_path(&self.corpus),
            opt_path(&self.milestones),
            opt_str(&self.release),
            self.architecture,
            self.format,
            self.jobs
                .map(|j| j.to_string())
                .unwrap_or_else(|| "(auto)".to_string()),
        )
    }
}
