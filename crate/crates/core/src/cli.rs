//! The `mirage` command line.
//!
//! Settings come from an optional TOML file and are overridden by flags.
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! trace, data and output errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::analysis::{autocorrelation, default_max_lag, flatness, mean_abs_acf, AnalysisError};
use crate::channel::ChannelParams;
use crate::engine::{self, SimConfig, SimError};
use crate::quantifier::{GoalMode, GoalPolicy};
use crate::report::{self, ReportError};
use crate::trace::{self, CompetingProducts, DiscountCycle, ThresholdRestock, Trace, TraceError};

pub const SEED_ENV: &str = "MIRAGE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "mirage",
    version,
    about = "Honeytoken obfuscation of RFID inventory trends"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write the attacker view and summaries.
    Simulate(SimulateArgs),
    /// Generate a synthetic ground-truth trace.
    GenTrace(GenTraceArgs),
    /// Correlogram and flatness of series stored in CSV files.
    Analyze(AnalyzeArgs),
    /// Average many seeded runs per honeytoken budget.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Goal mode, e.g. flat-inventory, random-sales ("flat" and "random"
    /// mean the inventory variants).
    #[arg(long)]
    pub goal: Option<GoalMode>,
    /// Run seed; falls back to the config file, then to MIRAGE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of honeytokens; defaults to the trace's item count.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Budgets as multiples of the trace's item count.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Runs per budget.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    #[command(subcommand)]
    pub scenario: ScenarioCmd,
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    /// Constant sales with a periodic discount spike.
    Discount {
        #[arg(long, default_value_t = 2)]
        base: usize,
        #[arg(long, default_value_t = 20)]
        spike: usize,
        #[arg(long, default_value_t = 30)]
        period: usize,
        #[arg(long, default_value_t = 90)]
        steps: usize,
        #[arg(long)]
        initial_stock: Option<usize>,
        #[arg(long, value_parser = parse_hex_u32, default_value = "0x0000abcd")]
        epc_type: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random sales with a delivery whenever stock falls below a threshold.
    Threshold {
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 50)]
        initial_stock: usize,
        #[arg(long, default_value_t = 10)]
        threshold: usize,
        #[arg(long, default_value_t = 50)]
        restock: usize,
        #[arg(long, default_value_t = 4)]
        mean_sales: usize,
        #[arg(long, value_parser = parse_hex_u32, default_value = "0x0000abcd")]
        epc_type: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two products with opposite sales trends; writes `<stem>_1` and `<stem>_2`.
    Competing {
        #[arg(long, default_value_t = 36)]
        steps: usize,
        #[arg(long, default_value_t = 12)]
        restock: usize,
        #[arg(long, default_value_t = 8)]
        spread: usize,
        #[arg(long, default_value_t = 2.0)]
        noise_sd: f64,
        #[arg(long)]
        initial_stock: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV files with a header row.
    #[arg(required = true)]
    pub series: Vec<PathBuf>,
    #[arg(long, default_value = "inventory")]
    pub column: String,
    /// Correlogram depth; defaults to min(10, len / 4).
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_hex_u32(s: &str) -> Result<u32, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u32::from_str_radix(digits, 16).map_err(|e| format!("`{s}` is not a 32-bit hex code: {e}"))
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub av_default: Option<f64>,
    pub other_item_types: Vec<u32>,
    pub goal: Option<GoalPolicy>,
    pub channel: Option<ChannelParams>,
    pub sweep: Option<SweepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub budgets: Option<Vec<f64>>,
    pub seeds: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::BadParameter { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Trace(t) => t.into(),
            SimError::Config { .. } | SimError::Policy(_) | SimError::Channel(_) => {
                CliError::Config(e.to_string())
            }
            SimError::Programmer { .. } | SimError::Invariant { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Flag, then file value, then `MIRAGE_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}: `{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Everything `simulate` and `sweep` need, after merging file and flags.
struct Resolved {
    trace: Trace,
    config: SimConfig,
    out: PathBuf,
    file: FileConfig,
}

fn resolve(run: &RunArgs, budget: Option<usize>) -> Result<Resolved, CliError> {
    let file = match &run.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let trace_path = run
        .trace
        .clone()
        .or_else(|| file.trace.clone())
        .ok_or_else(|| CliError::Config("trace: no trace file given (use --trace)".into()))?;
    let trace = trace::load_trace(&trace_path)?;
    let mut goal = file.goal.clone().unwrap_or_default();
    if let Some(mode) = run.goal {
        goal.mode = mode;
    }
    let config = SimConfig {
        budget: budget.or(file.budget).unwrap_or_else(|| trace.item_count()),
        goal,
        channel: file.channel.unwrap_or_default(),
        seed: resolve_seed(run.seed, file.seed)?,
        av_default: file.av_default.unwrap_or(SimConfig::default().av_default),
        other_item_types: file.other_item_types.clone(),
    };
    config.validate()?;
    let out = run
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Resolved {
        trace,
        config,
        out,
        file,
    })
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let r = resolve(&args.run, args.budget)?;
    let report = engine::run(&r.trace, &r.config)?;
    report::write_report_files(&report, &r.out)?;
    print!("{}", report::summary_text(&report));
    for name in report::REPORT_FILES {
        println!("wrote {}", r.out.join(name).display());
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let r = resolve(&args.run, None)?;
    let from_file = r.file.sweep.as_ref();
    let budgets = args
        .budgets
        .clone()
        .or_else(|| from_file.and_then(|s| s.budgets.clone()))
        .unwrap_or_else(|| vec![1.0, 1.5, 3.0]);
    let seeds = args
        .seeds
        .or_else(|| from_file.and_then(|s| s.seeds))
        .unwrap_or(30);
    if budgets.is_empty() || seeds == 0 {
        return Err(CliError::Config(
            "sweep: need at least one budget and one seed".into(),
        ));
    }
    let rows = engine::sweep(&r.trace, &r.config, &budgets, seeds)?;
    fs::create_dir_all(&r.out).map_err(|e| CliError::Data(format!("{}: {e}", r.out.display())))?;
    let text = report::tradeoff_csv(&rows);
    let path = r.out.join("tradeoff.csv");
    report::write_atomic(&path, &text)?;
    print!("{text}");
    println!("wrote {}", path.display());
    Ok(())
}

/// `dir/stem_<n>.ext` for the n-th trace of a multi-trace scenario.
fn numbered(path: &Path, n: usize) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{n}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{n}"),
    };
    path.with_file_name(name)
}

fn write_trace(trace: &Trace, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    report::write_atomic(path, &trace.to_csv_string())?;
    println!(
        "wrote {} ({} steps, initial stock {})",
        path.display(),
        trace.len(),
        trace.initial_stock
    );
    Ok(())
}

fn gen_trace(args: &GenTraceArgs) -> Result<(), CliError> {
    match &args.scenario {
        ScenarioCmd::Discount {
            base,
            spike,
            period,
            steps,
            initial_stock,
            epc_type,
            out,
        } => {
            let t = DiscountCycle {
                base: *base,
                spike: *spike,
                period: *period,
                steps: *steps,
                initial_stock: *initial_stock,
                epc_type: *epc_type,
            }
            .generate()?;
            write_trace(&t, out)
        }
        ScenarioCmd::Threshold {
            steps,
            initial_stock,
            threshold,
            restock,
            mean_sales,
            epc_type,
            seed,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(*seed, None)?);
            let t = ThresholdRestock {
                steps: *steps,
                initial_stock: *initial_stock,
                threshold: *threshold,
                restock: *restock,
                mean_sales: *mean_sales,
                epc_type: *epc_type,
            }
            .generate(&mut rng)?;
            write_trace(&t, out)
        }
        ScenarioCmd::Competing {
            steps,
            restock,
            spread,
            noise_sd,
            initial_stock,
            seed,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(*seed, None)?);
            let (a, b) = CompetingProducts {
                steps: *steps,
                restock: *restock,
                spread: *spread,
                noise_sd: *noise_sd,
                initial_stock: *initial_stock,
                ..CompetingProducts::default()
            }
            .generate(&mut rng)?;
            write_trace(&a, &numbered(out, 1))?;
            write_trace(&b, &numbered(out, 2))
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let mut flat_rows = Vec::new();
    for path in &args.series {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let xs = report::read_column(&text, &args.column)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let lag = args
            .max_lag
            .unwrap_or_else(|| default_max_lag(xs.len()).max(1));
        let c = autocorrelation(&xs, lag)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        let out = args.out.join(format!("{stem}_correlogram.csv"));
        report::write_atomic(&out, &report::correlogram_csv(&c))?;
        println!(
            "{stem}: mean_abs_acf {:.6} over lags 1..={lag}",
            mean_abs_acf(&c)
        );
        println!("wrote {}", out.display());
        flat_rows.push((stem, flatness(&xs)?));
    }
    let rows: Vec<(&str, _)> = flat_rows.iter().map(|(s, f)| (s.as_str(), f)).collect();
    let out = args.out.join("flatness.csv");
    report::write_atomic(&out, &report::flatness_csv(&rows))?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::GenTrace(a) => gen_trace(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// Parses `args` (program name first), runs the command and reports errors
/// on stderr.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mirage: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
