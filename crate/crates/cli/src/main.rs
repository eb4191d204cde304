//! `logsift` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 endpoint error.

mod commands;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logsift::config::Mode;
use logsift::Exec;

#[derive(Debug, Parser)]
#[command(name = "logsift", version, about = "Log template mining and analytics")]
pub struct Cli {
    /// Seed for every random choice (default 42, or the config file's).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sharded stages; 1 runs sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stage 1: group lines by masked signature (JSON lines out).
    Signatures(SignaturesArgs),
    /// Stage 2: produce templates for each signature group.
    Templates(TemplatesArgs),
    /// Stage 3: match lines to templates (JSON-lines events out).
    Parse(ParseArgs),
    /// Coverage of a template set over log files.
    Coverage(CoverageArgs),
    /// Perturbation robustness table.
    Perturb(PerturbArgs),
    /// Analytics over parsed events.
    #[command(subcommand)]
    Mine(MineCommand),
    /// Writes CSV/TSV tables and SVG charts for a parsed event file.
    Report(ReportArgs),
    /// Synthetic corpus with gold templates.
    Gen(GenArgs),
    /// Prints a worked low-rank adapter example.
    PeftDemo(PeftArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct SignaturesArgs {
    /// Log files; none or `-` reads standard input.
    pub inputs: Vec<PathBuf>,
    /// Representatives kept per group.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// jsonl (full groups) or tsv (summary).
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TemplatesArgs {
    /// Groups written by `signatures`.
    #[arg(long)]
    pub groups: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Templates file (one per line, `#` comments).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-group results including errors, as JSON lines.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_concurrent: Option<usize>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub templates: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    /// Severity rules (`SEVERITY<TAB>substring`); defaults to the bundled set.
    #[arg(long)]
    pub severity_rules: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub templates: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractorKind {
    /// Class-marker masking, naming placeholders `<num1>`, `<hex1>`, ...
    Masking,
    /// The gold template set itself.
    Gold,
    /// The configured chat-completion endpoint.
    Llm,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Gold templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    /// Distinct gold patterns to sample.
    #[arg(long, default_value_t = 100)]
    pub patterns: usize,
    /// Messages kept per pattern.
    #[arg(long, default_value_t = 3)]
    pub instances: usize,
    /// Comma-separated kinds (e.g. typo,extra-words); default all seven.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<String>,
    #[arg(long, value_enum, default_value = "masking")]
    pub extractor: ExtractorKind,
    /// Compare original and perturbed messages instead of patterns.
    #[arg(long)]
    pub message_level: bool,
    /// Failure examples as JSON lines.
    #[arg(long)]
    pub failures: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum MineCommand {
    /// One row per template: count, time span, severity, hosts.
    Fingerprint(FingerprintArgs),
    /// Severity counts and shares.
    Severity(SeverityArgs),
    /// Fixed-window histogram per category and its CDF.
    Temporal(TemporalArgs),
    /// Attach job ids to events by node and time.
    Jobs(JobsArgs),
    /// Ward clustering of a category × domain matrix.
    Cluster(ClusterArgs),
    /// 2-D kernel density grid.
    Kde(KdeArgs),
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Templates file, to fill the pattern column.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeverityArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Category,
    Severity,
    Template,
}

#[derive(Debug, Args)]
pub struct TemporalArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Needed for `--by category`.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Category rules (`ID<TAB>Label<TAB>kw+kw`); defaults to the bundled set.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "category")]
    pub by: GroupBy,
    /// Window length in seconds.
    #[arg(long)]
    pub window: Option<i64>,
    /// Histogram CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-category CDF CSV.
    #[arg(long)]
    pub cdf_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JobsArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// CSV `job_id,account,start_epoch,end_epoch,node_list`.
    #[arg(long)]
    pub jobs: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Matrix CSV (`category,<domain>,...`).
    #[arg(long, conflicts_with_all = ["events", "jobs"])]
    pub matrix: Option<PathBuf>,
    /// Build the matrix from events joined to jobs instead.
    #[arg(long, requires_all = ["jobs", "templates"])]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<PathBuf>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Directory for the ordered matrix, order files and dendrograms;
    /// without it the ordered matrix goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    /// CSV `x,y[,weight]`, optional header.
    #[arg(long, conflicts_with = "events")]
    pub pairs: Option<PathBuf>,
    /// Take coordinates from event variables instead.
    #[arg(long, requires_all = ["x_var", "y_var"])]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub x_var: Option<String>,
    #[arg(long)]
    pub y_var: Option<String>,
    /// `NXxNY`.
    #[arg(long, default_value = "100x100", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// `HX,HY`; default per-axis Silverman rule.
    #[arg(long, value_parser = parse_pair)]
    pub bandwidth: Option<(f64, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected NXxNY")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected HX,HY")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Adds the category × account heatmap.
    #[arg(long)]
    pub jobs: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 50)]
    pub templates: usize,
    #[arg(long, default_value_t = 10_000)]
    pub lines: usize,
    /// Output directory.
    #[arg(long, default_value = "corpus")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PeftArgs {
    /// Also check a random adapter of this shape: `D,K,R`.
    #[arg(long)]
    pub random: Option<String>,
}

/// Invalid flag combination or argument value.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Chat-completion endpoint unreachable or failing.
#[derive(Debug)]
pub struct EndpointError(pub String);

impl std::fmt::Display for EndpointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EndpointError {}

pub fn exec_for(threads: Option<usize>) -> anyhow::Result<Exec> {
    match threads {
        Some(0) => Err(UsageError("--threads must be >= 1".into()).into()),
        Some(1) => Ok(Exec::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
            #[cfg(not(feature = "parallel"))]
            let _ = n;
            Ok(Exec::Parallel)
        }
        None => Ok(Exec::Parallel),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<UsageError>()) {
        1
    } else if e.chain().any(|c| c.is::<EndpointError>()) {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
