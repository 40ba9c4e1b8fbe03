//! `ccenv` — Debian snapshot analytics and isolated package workspaces.
//!
//! Exit codes: 0 on success, 1 when an operation fails, 2 on usage errors.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use commands::VulnSource;
use config::{
    default_config_path, CliConfig, FileConfig, OutputFormat, Overrides, ENV_CACHE, ENV_MIRROR,
    ENV_SNAPSHOT_URL,
};

/// Debian snapshot analytics and isolated package workspaces.
///
/// Settings resolve with the precedence flags > environment > config file >
/// defaults; `ccenv config show` prints the effective result.
#[derive(Parser)]
#[command(name = "ccenv", version, about)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Config file (default: ~/.config/ccenv/config)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cache directory for downloaded indices and package archives
    #[arg(long, global = true, env = ENV_CACHE, value_name = "DIR")]
    cache: Option<PathBuf>,

    /// Package mirror serving index `Filename:` paths (directory or URL)
    #[arg(long, global = true, env = ENV_MIRROR, value_name = "DIR|URL")]
    mirror: Option<String>,

    /// Dated snapshot archive base for `fetch` (directory or URL)
    #[arg(long, global = true, env = ENV_SNAPSHOT_URL, value_name = "URL")]
    snapshot_url: Option<String>,

    /// Local corpus of daily indices: <release>/<YYYY-MM-DD>/Packages[.gz|.xz]
    #[arg(long, global = true, value_name = "DIR")]
    corpus: Option<PathBuf>,

    /// Release milestone table (TOML) for fix-lag lifecycle staging
    #[arg(long, global = true, value_name = "FILE")]
    milestones: Option<PathBuf>,

    /// Architecture of the indices to fetch (default: amd64)
    #[arg(long, global = true, value_name = "ARCH")]
    architecture: Option<String>,

    /// Output format for summaries printed to stdout
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Worker threads for data-parallel stages (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Download dated Packages indices into the cache
    Fetch {
        /// Release codename (falls back to the configured default)
        #[arg(long)]
        release: Option<String>,
        /// First snapshot date (YYYY-MM-DD)
        #[arg(long)]
        from: NaiveDate,
        /// Last snapshot date, inclusive (default: --from)
        #[arg(long)]
        to: Option<NaiveDate>,
    },
    /// Build or export the evolutionary dependency graph
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Project additions and removals between two releases
    Diff {
        /// Baseline release
        #[arg(long)]
        from: String,
        /// Comparison release
        #[arg(long)]
        to: String,
        /// Also write the full diff (including common projects) as CSV
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Cross-release incompatibility matrix with reason classification
    Incompat {
        /// Show one cell: the target release providing the packages
        #[arg(long, requires = "to")]
        from: Option<String>,
        /// Show one cell: the dependent release whose clauses are checked
        #[arg(long, requires = "from")]
        to: Option<String>,
        /// Write matrix.csv, reasons.csv and findings.csv to this directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// CVE ingestion, graph annotation and analytics
    #[command(subcommand)]
    Vuln(VulnCmd),
    /// Resolve a package's closure and install it into a fresh workspace
    Install {
        /// Package name
        package: String,
        /// Release codename (falls back to the configured default)
        #[arg(long)]
        release: Option<String>,
        /// Resolve against the newest snapshot on or before this date
        #[arg(long)]
        date: Option<NaiveDate>,
        /// Workspace directory to create (default: ./<package>-<release>)
        #[arg(long, value_name = "DIR")]
        dest: Option<PathBuf>,
        /// Prefer this package where a dependency lists alternatives (repeatable)
        #[arg(long)]
        prefer: Vec<String>,
    },
    /// Run a workspace's launcher, propagating its exit code
    Run {
        /// Workspace directory
        workspace: PathBuf,
        /// Arguments passed through to the entry command
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<OsString>,
    },
    /// Print or save a workspace's software bill of materials
    Sbom {
        /// Workspace directory
        workspace: PathBuf,
        /// Write the canonical JSON document to this file
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Delete a workspace (refuses directories ccenv did not create)
    Remove {
        /// Workspace directory
        workspace: PathBuf,
    },
    /// Configuration inspection
    #[command(subcommand)]
    Config(ConfigCmd),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Build the graph from the corpus and print per-release totals
    Build,
    /// Export nodes and edges (--format json → JSONL, otherwise CSV)
    Export {
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum VulnCmd {
    /// Annotate graph nodes with vulnerable/fixed version points
    Annotate {
        #[command(flatten)]
        source: FeedArgs,
        /// Write all annotations to this file (--format json → JSONL, else CSV)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Open/fixed counts and propagation through the dependency graph
    Report {
        #[command(flatten)]
        source: FeedArgs,
        /// Write open_fixed.csv and the propagation CSVs to this directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Lag between CVE publication and the first fixed upload
    Lag {
        #[command(flatten)]
        source: FeedArgs,
        /// Write the per-stage lag table as CSV to this file
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FeedArgs {
    /// Security-tracker JSON feed (project → CVE → release status)
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "vuln_dir",
        required_unless_present = "vuln_dir"
    )]
    feed: Option<PathBuf>,

    /// Directory of per-CVE JSON files
    #[arg(long, value_name = "DIR")]
    vuln_dir: Option<PathBuf>,

    /// JSON table of CVE id → publication date overrides
    #[arg(long, value_name = "FILE")]
    publish_dates: Option<PathBuf>,
}

impl From<FeedArgs> for VulnSource {
    fn from(args: FeedArgs) -> Self {
        VulnSource {
            feed: args.feed,
            vuln_dir: args.vuln_dir,
            publish_dates: args.publish_dates,
        }
    }
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Print the effective configuration after all precedence rules
    Show,
}

#[cfg(feature = "parallel")]
fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ccenv: thread pool already initialised: {err}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_jobs(jobs: Option<usize>) {
    if jobs.is_some() {
        eprintln!("ccenv: built without the `parallel` feature; --jobs has no effect");
    }
}

fn run(cli: Cli) -> Result<()> {
    let globals = cli.globals;
    let file = match &globals.config {
        Some(path) => FileConfig::load(path)?,
        None => match default_config_path() {
            Some(path) if path.is_file() => FileConfig::load(&path)?,
            _ => FileConfig::default(),
        },
    };
    let cfg = CliConfig::resolve(
        Overrides {
            cache: globals.cache,
            mirror: globals.mirror,
            snapshot_url: globals.snapshot_url,
            corpus: globals.corpus,
            milestones: globals.milestones,
            release: None,
            architecture: globals.architecture,
            format: globals.format,
            jobs: globals.jobs,
        },
        file,
    );
    configure_jobs(cfg.jobs);
    match cli.command {
        Command::Fetch { release, from, to } => commands::fetch(&cfg, release, from, to),
        Command::Graph(GraphCmd::Build) => commands::graph_build(&cfg),
        Command::Graph(GraphCmd::Export { out }) => commands::graph_export(&cfg, &out),
        Command::Diff { from, to, out } => commands::diff(&cfg, &from, &to, out.as_deref()),
        Command::Incompat { from, to, out } => {
            commands::incompat(&cfg, from.as_deref(), to.as_deref(), out.as_deref())
        }
        Command::Vuln(VulnCmd::Annotate { source, out }) => {
            commands::vuln_annotate(&cfg, &source.into(), out.as_deref())
        }
        Command::Vuln(VulnCmd::Report { source, out }) => {
            commands::vuln_report(&cfg, &source.into(), out.as_deref())
        }
        Command::Vuln(VulnCmd::Lag { source, out }) => {
            commands::vuln_lag(&cfg, &source.into(), out.as_deref())
        }
        Command::Install {
            package,
            release,
            date,
            dest,
            prefer,
        } => commands::install_cmd(&cfg, &package, release, date, dest, prefer),
        Command::Run { workspace, args } => commands::run_workspace(&workspace, &args),
        Command::Sbom { workspace, out } => commands::sbom_cmd(&cfg, &workspace, out.as_deref()),
        Command::Remove { workspace } => commands::remove_cmd(&workspace),
        Command::Config(ConfigCmd::Show) => {
            print!("{}", cfg.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Prints help/version to stdout (exit 0) or the usage error to
        // stderr (exit 2).
        Err(err) => err.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Join the context chain, skipping causes already embedded in
            // their parent's Display text.
            let mut message = err.to_string();
            for cause in err.chain().skip(1) {
                let text = cause.to_string();
                if !message.contains(&text) {
                    message.push_str(": ");
                    message.push_str(&text);
                }
            }
            eprintln!("ccenv: {message}");
            ExitCode::FAILURE
        }
    }
}
