//! `oricci`: rolling curvature indicators, sweeps, bound checks and sub-sampling.
//!
//! Exit codes: 0 success, 1 a checked bound was violated, 2 usage or
//! configuration error, 3 I/O error, 4 data error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oricci::bounds::{run_kn_family, run_random_suite, SuiteConfig, SuiteReport};
use oricci::diagnostics::{t_sweep, xi_sweep};
use oricci::indicator::{DistanceTransform, InputMode, WindowConfig};
use oricci::ingestion::{load_price_csv, screen_entities, PriceMatrix, ScreeningReport};
use oricci::{
    indicator_series, subsample_indicator_series, synthetic, AveragingMode, Error, ErrorClass, Objective,
    SubsampleConfig, Weighting,
};
use serde::Serialize;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "oricci", version, about = "Ollivier-Ricci curvature indicators for correlation networks")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "ORICCI_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Indicator series over rolling windows.
    Indicator(IndicatorArgs),
    /// One indicator series per threshold or window length.
    Sweep(SweepArgs),
    /// Check the single-edge perturbation bounds.
    Bounds(BoundsArgs),
    /// Indicator on the extremal-curvature subgraph of each window.
    Subsample(SubsampleArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Long-format CSV with header `date,ticker,close`.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Built-in scenario: regime-switch, white-noise or comoving.
    #[arg(long)]
    synthetic: Option<String>,
    /// Output file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    output: PathBuf,
    /// Seed for synthetic data and random search.
    #[arg(long)]
    seed: Option<u64>,
    /// Flag tickers below this in-sample coverage.
    #[arg(long, default_value_t = 0.0)]
    min_coverage: f64,
    /// Drop flagged tickers instead of only reporting them.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    /// Observations per window.
    #[arg(long = "T", default_value_t = 132)]
    window: usize,
    #[arg(long, default_value_t = 0.85, allow_negative_numbers = true)]
    xi: f64,
    /// sqrt, power:<p> or log1p.
    #[arg(long, default_value = "sqrt")]
    distance: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Edges)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = WeightingArg::EdgeWeight)]
    weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = ReturnsArg::Raw)]
    returns: ReturnsArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Edges,
    Pairs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightingArg {
    #[value(name = "edge_weight", alias = "edge-weight")]
    EdgeWeight,
    Uniform,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ReturnsArg {
    Raw,
    Log,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum SweepAxisArg {
    Xi,
    #[value(name = "T")]
    #[serde(rename = "T")]
    Window,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Random,
    KnMinusEdge,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ObjectiveArg {
    Minimize,
    Maximize,
}

#[derive(Args, Debug)]
struct IndicatorArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, value_enum)]
    sweep: SweepAxisArg,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true)]
    grid: Vec<f64>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Random)]
    family: FamilyArg,
    /// Node count or inclusive range `a..b` for the K_n family.
    #[arg(long, default_value = "4..10")]
    n: String,
    #[arg(long, value_enum, default_value_t = WeightingArg::EdgeWeight)]
    weighting: WeightingArg,
    /// Report file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SubsampleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    /// Subgraph size.
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Minimize)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

/// Everything needed to rerun a command; written next to its output.
#[derive(Serialize, Debug)]
struct RunConfig {
    command: &'static str,
    version: &'static str,
    input: Option<PathBuf>,
    synthetic: Option<String>,
    output: PathBuf,
    seed: Option<u64>,
    jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<WindowConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subsample: Option<SubsampleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepAxisArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<SuiteConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<FamilyArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<(usize, usize)>,
}

impl RunConfig {
    fn new(command: &'static str, output: &Path, jobs: usize) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            input: None,
            synthetic: None,
            output: output.to_path_buf(),
            seed: None,
            jobs,
            min_coverage: None,
            strict: None,
            window: None,
            subsample: None,
            sweep: None,
            grid: None,
            bounds: None,
            family: None,
            n: None,
        }
    }

    fn with_data(mut self, data: &DataArgs) -> Self {
        self.input = data.input.clone();
        self.synthetic = data.synthetic.clone();
        self.seed = data.seed;
        self.min_coverage = Some(data.min_coverage);
        self.strict = Some(data.strict);
        self
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn write_config(config: &RunConfig) -> Result<(), Error> {
    let path = sibling(&config.output, ".config.json");
    serde_json::to_writer_pretty(create(&path)?, config)?;
    Ok(())
}

fn window_config(args: &WindowArgs) -> Result<WindowConfig, Failure> {
    let config = WindowConfig {
        window: args.window,
        xi: args.xi,
        distance: args.distance.parse::<DistanceTransform>()?,
        input_mode: match args.returns {
            ReturnsArg::Raw => InputMode::RawPrice,
            ReturnsArg::Log => InputMode::LogReturn,
        },
        averaging: match args.mode {
            ModeArg::Edges => AveragingMode::Edges,
            ModeArg::Pairs => AveragingMode::Pairs,
        },
        weighting: weighting(args.weighting),
    };
    config.validate()?;
    Ok(config)
}

fn weighting(arg: WeightingArg) -> Weighting {
    match arg {
        WeightingArg::EdgeWeight => Weighting::EdgeWeight,
        WeightingArg::Uniform => Weighting::Uniform,
    }
}

fn load_prices(data: &DataArgs) -> Result<PriceMatrix, Failure> {
    if !(0.0..=1.0).contains(&data.min_coverage) {
        return Err(Failure::Usage(format!("--min-coverage {} must lie in [0, 1]", data.min_coverage)));
    }
    let prices = match (&data.input, &data.synthetic) {
        (Some(path), _) => load_price_csv(path)?,
        (None, Some(name)) => synthetic::scenario(name, data.seed)?,
        (None, None) => return Err(Failure::Usage("one of --input or --synthetic is required".into())),
    };
    let first = prices.dates()[0];
    let last = *prices.dates().last().expect("non-empty price matrix");
    let (prices, report) = screen_entities(&prices, first, last, data.min_coverage, data.strict)?;
    write_screening(&data.output, &report)?;
    log::info!("{} dates x {} tickers", prices.n_dates(), prices.n_tickers());
    Ok(prices)
}

fn write_screening(output: &Path, report: &ScreeningReport) -> Result<(), Error> {
    if report.is_empty() {
        return Ok(());
    }
    for entry in &report.entries {
        log::warn!("{}: coverage {:.3} ({:?})", entry.ticker, entry.coverage, entry.action);
    }
    serde_json::to_writer_pretty(create(&sibling(output, ".screening.json"))?, report)?;
    Ok(())
}

fn run_indicator(args: IndicatorArgs, jobs: usize) -> Outcome {
    let window = window_config(&args.window)?;
    let prices = load_prices(&args.data)?;
    let series = indicator_series(&prices, &window)?;
    let out = create(&args.data.output)?;
    if is_json(&args.data.output) {
        series.write_json(out)?;
    } else {
        series.write_csv(out)?;
    }
    if series.gap_count() > 0 {
        log::warn!("{} of {} windows have no value", series.gap_count(), series.len());
    }
    let mut config = RunConfig::new("indicator", &args.data.output, jobs).with_data(&args.data);
    config.window = Some(window);
    write_config(&config)?;
    Ok(())
}

fn run_sweep(args: SweepArgs, jobs: usize) -> Outcome {
    let base = window_config(&args.window)?;
    if args.grid.is_empty() {
        return Err(Failure::Usage("--grid needs at least one value".into()));
    }
    let prices = load_prices(&args.data)?;
    let result = match args.sweep {
        SweepAxisArg::Xi => xi_sweep(&prices, &base, &args.grid)?,
        SweepAxisArg::Window => {
            let ts = args
                .grid
                .iter()
                .map(|&t| {
                    (t.fract() == 0.0 && t >= 0.0)
                        .then_some(t as usize)
                        .ok_or_else(|| Failure::Usage(format!("T grid value {t} is not a whole number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            t_sweep(&prices, &base, &ts)?
        }
    };
    result.write_csv(create(&args.data.output)?)?;
    for (value, acf) in result.values.iter().zip(&result.acf) {
        if let Some(acf) = acf {
            acf.write_csv(create(&sibling(&args.data.output, &format!(".acf_T{value}.csv")))?)?;
        }
    }
    let mut config = RunConfig::new("sweep", &args.data.output, jobs).with_data(&args.data);
    config.window = Some(base);
    config.sweep = Some(args.sweep);
    config.grid = Some(args.grid);
    write_config(&config)?;
    Ok(())
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("--n {s:?}: expected a number or a range like 4..10"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim_start_matches('=').trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo < 3 || hi < lo {
        return Err(Failure::Usage(format!("--n {s:?}: need 3 <= start <= end")));
    }
    Ok((lo, hi))
}

fn run_bounds(args: BoundsArgs, jobs: usize) -> Outcome {
    let weighting = weighting(args.weighting);
    let (lo, hi) = parse_range(&args.n)?;
    let report: SuiteReport = match args.family {
        FamilyArg::Random => {
            if args.trials == 0 {
                return Err(Failure::Usage("--trials must be positive".into()));
            }
            run_random_suite(SuiteConfig { trials: args.trials, seed: args.seed, weighting, ..SuiteConfig::default() })?
        }
        FamilyArg::KnMinusEdge => run_kn_family(lo..=hi, weighting)?,
    };
    let out = create(&args.output)?;
    if is_json(&args.output) {
        report.write_json(out)?;
    } else {
        report.write_csv(out)?;
    }
    let mut config = RunConfig::new("bounds", &args.output, jobs);
    config.seed = Some(args.seed);
    config.bounds = Some(report.config);
    config.family = Some(args.family);
    config.n = matches!(args.family, FamilyArg::KnMinusEdge).then_some((lo, hi));
    write_config(&config)?;
    for s in &report.summaries {
        log::info!("{}: {} of {} checks violated, min slack {}", s.bound_name.as_str(), s.violations, s.checks, s.min_slack);
    }
    if report.all_satisfied() {
        Ok(())
    } else {
        let failing: Vec<&str> =
            report.summaries.iter().filter(|s| s.violations > 0).map(|s| s.bound_name.as_str()).collect();
        Err(Failure::Violation(format!("bounds violated: {}", failing.join(", "))))
    }
}

fn run_subsample(args: SubsampleArgs, jobs: usize) -> Outcome {
    let window = window_config(&args.window)?;
    let prices = load_prices(&args.data)?;
    if args.m < 2 || args.m > prices.n_tickers() {
        return Err(Failure::Usage(format!("--m {} must lie in [2, {}]", args.m, prices.n_tickers())));
    }
    let sub = SubsampleConfig {
        m: args.m,
        objective: match args.objective {
            ObjectiveArg::Minimize => Objective::Minimize,
            ObjectiveArg::Maximize => Objective::Maximize,
        },
        seed: args.data.seed.unwrap_or(0),
        max_iters: args.max_iters,
        restarts: args.restarts,
        averaging: window.averaging,
        weighting: window.weighting,
    };
    sub.validate(prices.n_tickers())?;
    let out = subsample_indicator_series(&prices, &window, &sub)?;
    let file = create(&args.data.output)?;
    if is_json(&args.data.output) {
        out.series.write_json(file)?;
    } else {
        out.series.write_csv(file)?;
    }
    out.write_subsets_csv(create(&sibling(&args.data.output, ".subsets.csv"))?)?;
    let mut config = RunConfig::new("subsample", &args.data.output, jobs).with_data(&args.data);
    config.window = Some(window);
    config.subsample = Some(out.subset_config);
    write_config(&config)?;
    Ok(())
}

fn exit_code(failure: &Failure) -> u8 {
    match failure {
        Failure::Usage(_) => EXIT_USAGE,
        Failure::Violation(_) => EXIT_VIOLATION,
        Failure::Lib(e) => match e.class() {
            ErrorClass::Config => EXIT_USAGE,
            ErrorClass::Io => EXIT_IO,
            ErrorClass::Data => EXIT_DATA,
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let jobs = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        Some(j) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
                eprintln!("error: cannot start {j} worker threads: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
            j
        }
        None => rayon::current_num_threads(),
    };
    let result = match cli.command {
        Command::Indicator(args) => run_indicator(args, jobs),
        Command::Sweep(args) => run_sweep(args, jobs),
        Command::Bounds(args) => run_bounds(args, jobs),
        Command::Subsample(args) => run_subsample(args, jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) | Failure::Violation(msg) => eprintln!("error: {msg}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&failure))
        }
    }
}
