use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Exit status for command-line usage errors (sysexits EX_USAGE).
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "fwcorpus", version, about = "Build, audit and replicate firmware corpora")]
pub struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Output format for tables printed to stdout
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Worker count for every parallel stage
    #[arg(long, global = true)]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatusArg {
    Full,
    Partial,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrendArg {
    /// One series per hardening method
    Methods,
    /// NX adoption per ISA family
    NxIsa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Composition,
    Replication,
    Trend,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurveyView {
    Measure,
    Requirement,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MockScenario {
    /// 100 records over five loopback vendor hosts plus an archive and a hash store
    Standard,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse and validate a manifest
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        /// Write the records that validated, normalized, to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drop records whose sha256 was already seen
    Dedup {
        #[arg(long)]
        manifest: PathBuf,
        /// Deduplicated manifest
        #[arg(long)]
        out: Option<PathBuf>,
        /// Duplicate groups as JSON (input for `score --dedup-report`)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Recursively unpack firmware images into <out>/<sha256>/
    Unpack {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// TOML file declaring external unpackers
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
    },
    /// Check unpacked trees for root-filesystem markers
    Verify {
        /// Directory written by `unpack`
        #[arg(long)]
        unpacked: PathBuf,
        /// Marker file (one per line) or comma-separated list
        #[arg(long)]
        markers: Option<String>,
    },
    /// Detect kernel versions and ISAs in unpacked trees
    Identify {
        #[arg(long)]
        unpacked: PathBuf,
        /// Findings as JSON (input for `score` and `report composition`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deduplicated ELF inventory by ISA family and file class
    Inventory {
        #[arg(long)]
        unpacked: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// One CSV row per (ELF, origin firmware)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hardening adoption per release year
    Harden(TrendOpts),
    /// Self-audit a corpus against the soundness measures
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "corpus")]
        subject: String,
        /// JSON written by `identify --out`
        #[arg(long)]
        findings: Option<PathBuf>,
        /// JSON written by `dedup --report`
        #[arg(long)]
        dedup_report: Option<PathBuf>,
        /// CSV written by `match --out`
        #[arg(long)]
        matches: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StatusArg::None)]
        unpack_process: StatusArg,
        #[arg(long, value_enum, default_value_t = StatusArg::None)]
        reasoning: StatusArg,
        #[arg(long, value_enum, default_value_t = StatusArg::None)]
        acquisition: StatusArg,
        /// Full assessment as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate soundness assessments per measure and requirement
    Survey {
        /// Survey CSV (paper column plus one column per measure) or assessment JSON
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        input: Option<PathBuf>,
        /// Use the bundled survey of published corpora
        #[arg(long)]
        fixture: bool,
        #[arg(long, value_enum, default_value_t = SurveyView::Both)]
        by: SurveyView,
    },
    /// Match manifest records against an exploit database (JSON lines)
    Match {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-acquire samples: direct link, web archive, hash lookup, manual worklist
    Acquire(AcquireOpts),
    /// Emit composition, replication or trend tables
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Identification findings (composition)
        #[arg(long)]
        findings: Option<PathBuf>,
        /// results.json written by `acquire` (replication)
        #[arg(long)]
        results: Option<PathBuf>,
        /// Unpacked trees (trend)
        #[arg(long)]
        unpacked: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TrendArg::Methods)]
        mode: TrendArg,
        /// Use the bundled reference-corpus tables
        #[arg(long)]
        fixture: bool,
        /// Also write the table as CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct TrendOpts {
    #[arg(long)]
    unpacked: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = TrendArg::Methods)]
    mode: TrendArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AcquireOpts {
    #[arg(long, required_unless_present = "mock_scenario")]
    manifest: Option<PathBuf>,
    /// Output directory: samples/, results.json, replication.csv, worklist.csv
    #[arg(long)]
    out: PathBuf,
    /// Requests per second per host
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Per-request timeout in seconds
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    #[arg(long, default_value = fwcorpus::acquire::WaybackIndex::PUBLIC)]
    archive_base: String,
    /// Directory of samples named by sha256
    #[arg(long, conflicts_with = "hash_service")]
    hash_store: Option<PathBuf>,
    /// Download URL template containing {sha256}
    #[arg(long)]
    hash_service: Option<String>,
    /// Files found by hand; matching worklist items count as manual recoveries
    #[arg(long)]
    manual_dir: Option<PathBuf>,
    /// Do not consult robots.txt before direct downloads
    #[arg(long)]
    ignore_robots: bool,
    /// Accept payloads without checking their sha256
    #[arg(long)]
    no_verify: bool,
    /// Run against a built-in loopback scenario instead of the network
    #[arg(long, value_enum, conflicts_with_all = ["manifest", "hash_store", "hash_service"])]
    mock_scenario: Option<MockScenario>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
