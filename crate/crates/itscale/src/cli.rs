//! Command dispatch.
//!
//! Every output starts with `#` lines: the tool version, a command line
//! that regenerates the file, and one `key = value` line per effective
//! setting. Commands reading a series also forward the header of their
//! input, prefixed with `input:`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use itscale_core::analysis::{
    autocorr_at, autocorr_report, check_autocorr_request, check_moment_request, collapse_fit,
    conditional_pdf_estimate, detrend, log_returns, moment_report, moments_at, quantile_edges, return_pairs,
    Binning, MomentGuard,
};
use itscale_core::model::{EpochMode, Model, ModelParams};
use itscale_core::sampler::{sample, SamplingMode};
use itscale_core::theory::{
    calibrate, gbar_scaling_function, theoretical_moment, width_exponent, AutocorrModel, CalibrationOptions,
    TauCChoice,
};

use crate::config;
use crate::error::{CliError, Result};
use crate::grid::map_grid;
use crate::ingest::ingest;
use crate::tsv::{num, write_atomic, ParsedTable, Table};

#[derive(Parser, Debug)]
#[command(name = "itscale", version, about = "Simulate and analyze the inhomogeneous-time scaling model of index returns")]
pub struct Cli {
    /// Flat TOML file of flag defaults [env: ITSCALE_CONFIG]
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for grid evaluations; 0 uses one per core
    #[arg(long, global = true, default_value = "0")]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a daily-closure CSV and write it as TSV
    Ingest(IngestArgs),
    /// Generate a unit-return series from the model
    Simulate(SimulateArgs),
    /// Estimators on a return or price series
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Model predictions
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Fit D, nu and scale to a series
    Calibrate(CalibrateArgs),
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Histograms of T-step returns and the collapse exponent
    Collapse(CollapseArgs),
    /// Absolute moments S_q(T) and their exponents
    Moments(MomentsArgs),
    /// Volatility autocorrelation c(tau) and its decay exponent
    Autocorr(AutocorrArgs),
    /// Histograms of r2 given |r1| for non-overlapping return pairs
    Conditional(ConditionalArgs),
}

#[derive(Subcommand, Debug)]
pub enum TheoryCommand {
    /// Time-averaged S_q(T) and regression exponents
    Moments(TheoryMomentsArgs),
    /// Model c(tau) for fixed epochs
    Autocorr(TheoryAutocorrArgs),
    /// Collapsed time-averaged density
    Gbar(GbarArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochArg {
    Fixed,
    Geometric,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerArg {
    Latent,
    Conditional,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    /// `returns` for a `return` column, `prices` for `close`
    Auto,
    Returns,
    Prices,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Width exponent, 0 < D <= 0.5
    #[arg(long, default_value = "0.24")]
    pub d: f64,
    /// Tail index of the Student-t scaling function, > 2
    #[arg(long, default_value = "4")]
    pub nu: f64,
    /// Scale of the scaling function
    #[arg(long, default_value = "0.01")]
    pub scale: f64,
    /// Mean epoch length in steps
    #[arg(long = "tau-c", default_value = "500")]
    pub tau_c: usize,
    /// Conditioning depth m of the conditional sampler
    #[arg(long, default_value = "100")]
    pub window: usize,
    #[arg(long = "epoch-mode", value_enum, default_value = "fixed")]
    pub epoch_mode: EpochArg,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        let mode = match self.epoch_mode {
            EpochArg::Fixed => EpochMode::Fixed,
            EpochArg::Geometric => EpochMode::Geometric,
        };
        Ok(ModelParams::new(self.d, self.tau_c, self.nu, self.scale)?.with_window(self.window).with_epoch_mode(mode))
    }
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// TSV written by `ingest` or `simulate`
    #[arg(long)]
    pub input: PathBuf,
    /// Column to read; `auto` takes `return`, then `close`
    #[arg(long, default_value = "auto")]
    pub column: String,
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: InputKind,
    /// Remove the mean unit return before estimating
    #[arg(long, default_value = "true", action = ArgAction::Set)]
    pub detrend: bool,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// CSV with a header row
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "date-column", default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value = "close")]
    pub column: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "conditional")]
    pub mode: SamplerArg,
    #[arg(long, default_value = "27000")]
    pub length: usize,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CollapseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Durations T
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pub t: Vec<usize>,
    /// `fd` or `uniform:N`
    #[arg(long, default_value = "fd", value_parser = parse_bins)]
    pub bins: BinSpec,
    /// Growth of successive tail bins under `fd`
    #[arg(long = "tail-ratio", default_value = "1.5")]
    pub tail_ratio: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub q: Vec<f64>,
    /// Durations lo:hi, inclusive
    #[arg(long = "t-range", default_value = "1:25", value_parser = parse_span)]
    pub t_range: Span,
    /// Largest order accepted without a known tail index
    #[arg(long = "q-cap", default_value = "6")]
    pub q_cap: f64,
    /// Tail index of the data, if known; requires q < nu
    #[arg(long = "known-nu")]
    pub known_nu: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AutocorrArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long = "max-lag", default_value = "250")]
    pub max_lag: usize,
    #[arg(long = "fit-range", default_value = "1:100", value_parser = parse_span)]
    pub fit_range: Span,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "1")]
    pub t: usize,
    /// Number of equally populated |r1| classes
    #[arg(long, default_value = "3")]
    pub classes: usize,
    /// Explicit |r1| class edges; overrides --classes
    #[arg(long = "r1-edges", value_delimiter = ',')]
    pub r1_edges: Option<Vec<f64>>,
    #[arg(long, default_value = "fd", value_parser = parse_bins)]
    pub bins: BinSpec,
    #[arg(long = "tail-ratio", default_value = "1.5")]
    pub tail_ratio: f64,
    #[arg(long = "min-pairs", default_value = "200")]
    pub min_pairs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TheoryMomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub q: Vec<f64>,
    #[arg(long = "t-range", default_value = "1:25", value_parser = parse_span)]
    pub t_range: Span,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TheoryAutocorrArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "max-lag", default_value = "250")]
    pub max_lag: usize,
    #[arg(long = "fit-range", default_value = "1:100", value_parser = parse_span)]
    pub fit_range: Span,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GbarArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,5,25")]
    pub t: Vec<f64>,
    /// Range of x = r / T^(1/2)
    #[arg(long = "x-range", default_value = "-0.08:0.08", value_parser = parse_interval, allow_hyphen_values = true)]
    pub x_range: (f64, f64),
    #[arg(long, default_value = "161")]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub q: Vec<f64>,
    #[arg(long = "t-range", default_value = "1:25", value_parser = parse_span)]
    pub t_range: Span,
    #[arg(long = "tau-c", default_value = "500")]
    pub tau_c: usize,
    /// Candidate epoch lengths; overrides --tau-c
    #[arg(long = "tau-c-grid", value_delimiter = ',')]
    pub tau_c_grid: Option<Vec<usize>>,
    /// Weight of the squared decay-exponent residual in the D objective
    #[arg(long = "beta-weight", default_value = "0")]
    pub beta_weight: f64,
    #[arg(long = "fit-range", default_value = "1:100", value_parser = parse_span)]
    pub fit_range: Span,
    #[arg(long = "d-step", default_value = "0.01")]
    pub d_step: f64,
    #[arg(long = "max-iter", default_value = "50")]
    pub max_iter: usize,
    #[arg(long, default_value = "1e-6")]
    pub tol: f64,
    #[arg(long = "phase-tolerance", default_value = "0.01")]
    pub phase_tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the fitted parameters as a config file for `simulate`
    #[arg(long = "emit-config")]
    pub emit_config: Option<PathBuf>,
}

/// Inclusive integer range `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    fn pair(self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    fn values(self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

fn parse_span(s: &str) -> std::result::Result<Span, String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if lo < 1 || hi < lo {
        return Err("need 1 <= lo <= hi".into());
    }
    Ok(Span { lo, hi })
}

fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(lo < hi) {
        return Err("need lo < hi".into());
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinSpec {
    FreedmanDiaconis,
    Uniform(usize),
}

impl BinSpec {
    fn binning(self, tail_ratio: f64) -> Binning {
        match self {
            BinSpec::FreedmanDiaconis => Binning::FreedmanDiaconis { tail_ratio },
            BinSpec::Uniform(bins) => Binning::Uniform { bins },
        }
    }
}

fn parse_bins(s: &str) -> std::result::Result<BinSpec, String> {
    if s == "fd" {
        return Ok(BinSpec::FreedmanDiaconis);
    }
    match s.strip_prefix("uniform:").map(str::parse::<usize>) {
        Some(Ok(n)) if n > 0 => Ok(BinSpec::Uniform(n)),
        _ => Err("expected fd or uniform:N".into()),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    match try_run(argv) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
        Err(Failure::Run(e)) => {
            eprintln!("itscale: {e}");
            e.exit_code()
        }
    }
}

enum Failure {
    Usage(clap::Error),
    Run(CliError),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Run(e)
    }
}

impl From<clap::Error> for Failure {
    fn from(e: clap::Error) -> Self {
        Failure::Usage(e)
    }
}

const GLOBALS: [&str; 2] = ["config", "threads"];
/// Flags that choose where output goes rather than what it contains.
const NOT_ECHOED: [&str; 3] = ["out", "emit-config", "help"];

fn try_run(argv: Vec<String>) -> std::result::Result<(), Failure> {
    let cmd = Cli::command();
    let argv = match config::locate(&argv) {
        Some(path) => {
            let cfg = config::load(&path)?;
            let mut known = BTreeSet::new();
            collect_longs(&cmd, &mut known);
            let mut accepted: BTreeSet<String> = GLOBALS.iter().map(|s| s.to_string()).collect();
            if let Some(leaf) = leaf_from_argv(&cmd, &argv) {
                accepted.extend(leaf.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned));
            }
            known.extend(accepted.iter().cloned());
            config::apply(argv, &cfg, &accepted, &known)?
        }
        None => argv,
    };
    let matches = cmd.clone().try_get_matches_from(&argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let header = header_lines(&cmd, &matches);
    dispatch(cli, header)?;
    Ok(())
}

fn collect_longs(cmd: &clap::Command, out: &mut BTreeSet<String>) {
    out.extend(cmd.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned));
    for sub in cmd.get_subcommands() {
        collect_longs(sub, out);
    }
}

/// The subcommand named by the positional words of `argv`.
fn leaf_from_argv<'a>(cmd: &'a clap::Command, argv: &[String]) -> Option<&'a clap::Command> {
    let mut current = cmd;
    let mut found = false;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if GLOBALS.iter().any(|g| a == &format!("--{g}")) {
            it.next();
            continue;
        }
        if a.starts_with('-') {
            continue;
        }
        match current.find_subcommand(a) {
            Some(sub) => {
                current = sub;
                found = true;
            }
            None => break,
        }
        if !current.has_subcommands() {
            break;
        }
    }
    found.then_some(current)
}

fn header_lines(cmd: &clap::Command, matches: &ArgMatches) -> Vec<String> {
    let mut names = Vec::new();
    let mut c = cmd;
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        names.push(name.to_owned());
        c = c.find_subcommand(name).expect("matched subcommand exists");
        m = sub;
    }
    let mut settings = Vec::new();
    for arg in c.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if GLOBALS.contains(&long) || NOT_ECHOED.contains(&long) {
            continue;
        }
        let Ok(Some(raw)) = m.try_get_raw(arg.get_id().as_str()) else { continue };
        let value = raw.map(|v| v.to_string_lossy().into_owned()).collect::<Vec<_>>().join(",");
        settings.push((long.to_owned(), value));
    }
    let mut command = format!("itscale {}", names.join(" "));
    for (k, v) in &settings {
        command.push_str(&format!(" --{k} {}", shell_quote(v)));
    }
    let mut lines = vec![format!("itscale {}", env!("CARGO_PKG_VERSION")), format!("command: {command}")];
    lines.extend(settings.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

fn shell_quote(v: &str) -> String {
    let plain = !v.is_empty()
        && v.chars().all(|c| c.is_ascii_alphanumeric() || "_.,:/=+-".contains(c))
        && !v.starts_with('-');
    if plain {
        v.to_owned()
    } else {
        format!("'{}'", v.replace('\'', "'\\''"))
    }
}

fn dispatch(cli: Cli, header: Vec<String>) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Ingest(a) => run_ingest(a, header),
        Command::Simulate(a) => run_simulate(a, header),
        Command::Analyze(AnalyzeCommand::Collapse(a)) => run_collapse(a, header),
        Command::Analyze(AnalyzeCommand::Moments(a)) => run_moments(a, header, threads),
        Command::Analyze(AnalyzeCommand::Autocorr(a)) => run_autocorr(a, header, threads),
        Command::Analyze(AnalyzeCommand::Conditional(a)) => run_conditional(a, header),
        Command::Theory(TheoryCommand::Moments(a)) => run_theory_moments(a, header, threads),
        Command::Theory(TheoryCommand::Autocorr(a)) => run_theory_autocorr(a, header, threads),
        Command::Theory(TheoryCommand::Gbar(a)) => run_gbar(a, header, threads),
        Command::Calibrate(a) => run_calibrate(a, header),
    }
}

fn run_ingest(a: IngestArgs, header: Vec<String>) -> Result<()> {
    let records = ingest(&a.input, &a.date_column, &a.column)?;
    let mut t = Table::new(&header);
    t.columns(&["date", "close"]);
    for r in &records {
        t.row(&[r.date.to_string(), num(r.close)]);
    }
    t.emit(a.out.as_deref())
}

fn run_simulate(a: SimulateArgs, header: Vec<String>) -> Result<()> {
    let params = a.model.params()?;
    let mode = match a.mode {
        SamplerArg::Latent => SamplingMode::Latent,
        SamplerArg::Conditional => SamplingMode::Conditional,
    };
    let series = sample(a.length, &params, a.seed, mode)?;
    let mut t = Table::new(&header);
    t.columns(&["t", "return", "epoch"]);
    let mut epoch = 0usize;
    for (i, r) in series.returns.iter().enumerate() {
        while epoch + 1 < series.epoch_starts.len() && series.epoch_starts[epoch + 1] <= i {
            epoch += 1;
        }
        t.row(&[i.to_string(), num(*r), epoch.to_string()]);
    }
    t.emit(a.out.as_deref())
}

/// Unit returns of the input and the header lines to forward.
struct Series {
    unit: Vec<f64>,
    drift: Option<f64>,
    header: Vec<String>,
}

fn read_series(a: &InputArgs, detrended: bool) -> Result<Series> {
    let table = ParsedTable::read(&a.input)?;
    let column = if a.column == "auto" {
        ["return", "close"]
            .into_iter()
            .find(|c| table.columns.iter().any(|x| x == c))
            .ok_or_else(|| CliError::Invalid(format!("{}: no return or close column", a.input.display())))?
            .to_owned()
    } else {
        a.column.clone()
    };
    let values = table.numeric_column(&column, &a.input)?;
    let prices = match a.kind {
        InputKind::Auto => column == "close",
        InputKind::Returns => false,
        InputKind::Prices => true,
    };
    let unit = if prices { log_returns(&values, 1)? } else { values };
    let (unit, drift) = if detrended && a.detrend {
        let (x, drift) = detrend(&unit)?;
        (x, Some(drift))
    } else {
        (unit, None)
    };
    let header = table.comments.iter().map(|c| format!("input: {c}")).collect();
    Ok(Series { unit, drift, header })
}

fn table_for(mut header: Vec<String>, series: &Series) -> Table {
    header.extend(series.header.iter().cloned());
    let mut t = Table::new(&header);
    if let Some(d) = series.drift {
        t.comment(&format!("drift={}", num(d)));
    }
    t
}

fn run_collapse(a: CollapseArgs, header: Vec<String>) -> Result<()> {
    let s = read_series(&a.input, true)?;
    let fit = collapse_fit(&s.unit, &a.t, &a.bins.binning(a.tail_ratio))?;
    let mut t = table_for(header, &s);
    for (dur, width) in fit.durations.iter().zip(&fit.widths) {
        t.comment(&format!("T={dur} width={}", num(*width)));
    }
    t.columns(&["T", "x", "y"]);
    for (dur, points) in fit.durations.iter().zip(fit.collapsed_points()) {
        for (x, y) in points {
            t.row(&[dur.to_string(), num(x), num(y)]);
        }
    }
    t.comment(&format!("d_bar={} stderr={}", num(fit.d_bar), num(fit.fit.slope_stderr)));
    t.emit(a.out.as_deref())
}

fn run_moments(a: MomentsArgs, header: Vec<String>, threads: usize) -> Result<()> {
    let s = read_series(&a.input, true)?;
    let durations = a.t_range.values();
    let guard = match a.known_nu {
        Some(nu) => MomentGuard::KnownNu(nu),
        None => MomentGuard::Cap(a.q_cap),
    };
    check_moment_request(&a.q, &durations, guard)?;
    let rows = map_grid(durations.len(), threads, |i| moments_at(&s.unit, durations[i], &a.q))?
        .into_iter()
        .collect::<itscale_core::Result<Vec<_>>>()?;
    let report = moment_report(&a.q, &durations, guard, &rows)?;
    let mut t = table_for(header, &s);
    t.columns(&["q", "T", "S", "exponent", "stderr"]);
    for e in &report.exponents {
        for (dur, m) in report.durations.iter().zip(&e.moments) {
            t.row(&[num(e.q), dur.to_string(), num(*m), num(e.exponent), num(e.stderr)]);
        }
    }
    t.emit(a.out.as_deref())
}

fn autocorr_table(t: &mut Table, report: &itscale_core::analysis::AutocorrReport) {
    t.columns(&["tau", "c"]);
    for (tau, c) in report.c.iter().enumerate() {
        t.row(&[tau.to_string(), num(*c)]);
    }
    if !report.excluded.is_empty() {
        let lags: Vec<String> = report.excluded.iter().map(|l| l.to_string()).collect();
        t.comment(&format!("excluded={}", lags.join(",")));
    }
    t.comment(&format!("beta={} stderr={}", num(report.beta), num(report.beta_stderr)));
}

fn run_autocorr(a: AutocorrArgs, header: Vec<String>, threads: usize) -> Result<()> {
    let s = read_series(&a.input, true)?;
    check_autocorr_request(s.unit.len(), a.max_lag, a.fit_range.pair())?;
    let abs: Vec<f64> = s.unit.iter().map(|r| r.abs()).collect();
    let c = map_grid(a.max_lag + 1, threads, |tau| autocorr_at(&abs, tau))?
        .into_iter()
        .collect::<itscale_core::Result<Vec<_>>>()?;
    let report = autocorr_report(c, a.fit_range.pair())?;
    let mut t = table_for(header, &s);
    autocorr_table(&mut t, &report);
    t.emit(a.out.as_deref())
}

fn run_conditional(a: ConditionalArgs, header: Vec<String>) -> Result<()> {
    let s = read_series(&a.input, true)?;
    let edges = match &a.r1_edges {
        Some(e) => e.clone(),
        None => {
            let abs: Vec<f64> = return_pairs(&s.unit, a.t)?.iter().map(|p| p.0.abs()).collect();
            quantile_edges(&abs, a.classes)?
        }
    };
    let est = conditional_pdf_estimate(&s.unit, a.t, &edges, &a.bins.binning(a.tail_ratio), a.min_pairs)?;
    let mut t = table_for(header, &s);
    t.comment(&format!("pairs={}", est.pairs));
    for (k, b) in est.bins.iter().enumerate() {
        t.comment(&format!(
            "class={k} lo={} hi={} count={} variance={}",
            num(b.lo),
            num(b.hi),
            b.r2.len(),
            num(b.variance)
        ));
    }
    t.columns(&["class", "r2", "density"]);
    for (k, b) in est.bins.iter().enumerate() {
        for (x, p) in b.histogram.centers().into_iter().zip(b.histogram.densities()) {
            t.row(&[k.to_string(), num(x), num(p)]);
        }
    }
    t.emit(a.out.as_deref())
}

fn run_theory_moments(a: TheoryMomentsArgs, header: Vec<String>, threads: usize) -> Result<()> {
    let params = a.model.params()?;
    let durations = a.t_range.values();
    if durations.len() < 2 {
        return Err(CliError::Invalid("--t-range needs at least two durations".into()));
    }
    let curves = map_grid(a.q.len(), threads, |i| {
        let q = a.q[i];
        let fit = width_exponent(q, &durations, params.d(), params.tau_c())?;
        // μ_q is infinite for q ≥ ν; the exponent is still defined
        let values = durations
            .iter()
            .map(|t| theoretical_moment(q, *t, &params).unwrap_or(f64::NAN))
            .collect::<Vec<_>>();
        Ok::<_, itscale_core::Error>((fit, values))
    })?;
    let mut t = Table::new(&header);
    t.columns(&["q", "T", "S", "exponent", "stderr"]);
    for (q, curve) in a.q.iter().zip(curves) {
        let (fit, values) = curve?;
        for (dur, v) in durations.iter().zip(values) {
            t.row(&[num(*q), dur.to_string(), num(v), num(fit.slope), num(fit.slope_stderr)]);
        }
    }
    t.emit(a.out.as_deref())
}

fn run_theory_autocorr(a: TheoryAutocorrArgs, header: Vec<String>, threads: usize) -> Result<()> {
    let params = a.model.params()?;
    let (lo, hi) = a.fit_range.pair();
    if hi > a.max_lag || lo >= hi {
        return Err(CliError::Invalid("--fit-range must satisfy 1 <= lo < hi <= --max-lag".into()));
    }
    let m = AutocorrModel::new(&Model::new(params))?;
    let c = map_grid(a.max_lag + 1, threads, |tau| m.at(tau))?;
    let report = autocorr_report(c, a.fit_range.pair())?;
    let mut t = Table::new(&header);
    autocorr_table(&mut t, &report);
    t.emit(a.out.as_deref())
}

fn run_gbar(a: GbarArgs, header: Vec<String>, threads: usize) -> Result<()> {
    let params = a.model.params()?;
    if a.points < 2 {
        return Err(CliError::Invalid("--points must be at least 2".into()));
    }
    if let Some(bad) = a.t.iter().find(|t| !(**t > 0.0)) {
        return Err(CliError::Invalid(format!("--t must be positive, got {bad}")));
    }
    let (lo, hi) = a.x_range;
    let step = (hi - lo) / (a.points - 1) as f64;
    let n = a.points;
    let values = map_grid(a.t.len() * n, threads, |i| {
        let x = lo + step * (i % n) as f64;
        gbar_scaling_function(x, a.t[i / n], &params).map(|g| (x, g))
    })?;
    let mut t = Table::new(&header);
    t.columns(&["T", "x", "gbar"]);
    for (i, v) in values.into_iter().enumerate() {
        let (x, g) = v?;
        t.row(&[num(a.t[i / n]), num(x), num(g)]);
    }
    t.emit(a.out.as_deref())
}

fn run_calibrate(a: CalibrateArgs, header: Vec<String>) -> Result<()> {
    let s = read_series(&a.input, false)?;
    let options = CalibrationOptions {
        qs: a.q.clone(),
        durations: a.t_range.values(),
        tau_c: match &a.tau_c_grid {
            Some(grid) => TauCChoice::Grid(grid.clone()),
            None => TauCChoice::Fixed(a.tau_c),
        },
        beta_weight: a.beta_weight,
        beta_fit_range: a.fit_range.pair(),
        d_step: a.d_step,
        max_iter: a.max_iter,
        tol: a.tol,
        phase_tolerance: a.phase_tolerance,
        detrend: a.input.detrend,
    };
    let fit = calibrate(&s.unit, &options)?;
    let diag = &fit.diagnostics;
    let mut t = table_for(header, &s);
    t.columns(&["key", "value"]);
    let mut kv = |k: &str, v: String| t.row(&[k.to_owned(), v]);
    kv("d", num(fit.d));
    kv("nu", num(fit.nu));
    kv("scale", num(fit.scale));
    kv("tau_c", fit.tau_c.to_string());
    kv("objective", num(fit.objective));
    kv("iterations", fit.iterations.to_string());
    kv("converged", fit.converged.to_string());
    kv("d_at_boundary", diag.d_at_boundary.to_string());
    kv("log_likelihood", num(diag.log_likelihood));
    kv("drift", num(diag.drift));
    kv("empirical_beta", num(diag.empirical_beta));
    kv("model_beta", num(diag.model_beta));
    for (i, q) in options.qs.iter().enumerate() {
        kv(&format!("exponent_empirical_q{}", num(*q)), num(diag.empirical_exponents[i]));
        kv(&format!("exponent_theory_q{}", num(*q)), num(diag.theory_exponents[i]));
    }
    t.emit(a.out.as_deref())?;
    if let Some(path) = &a.emit_config {
        write_params_config(path, &fit, &a.input.input)?;
    }
    if !fit.converged {
        return Err(CliError::NotConverged { iterations: fit.iterations });
    }
    Ok(())
}

/// Parameters as a config file, floats in shortest round-trip form.
fn write_params_config(path: &Path, fit: &itscale_core::theory::CalibrationResult, input: &Path) -> Result<()> {
    let text = format!(
        "# calibrated on {}\nd = {:?}\nnu = {:?}\nscale = {:?}\ntau-c = {}\n",
        input.display(),
        fit.d,
        fit.nu,
        fit.scale,
        fit.tau_c
    );
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_and_bins() {
        assert_eq!(parse_span("1:100"), Ok(Span { lo: 1, hi: 100 }));
        assert!(parse_span("0:5").is_err());
        assert!(parse_span("5:4").is_err());
        assert_eq!(parse_interval("-1.5:2"), Ok((-1.5, 2.0)));
        assert_eq!(parse_bins("uniform:40"), Ok(BinSpec::Uniform(40)));
        assert!(parse_bins("uniform:0").is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("1,2,3"), "1,2,3");
        assert_eq!(shell_quote("-0.08:0.08"), "'-0.08:0.08'");
        assert_eq!(shell_quote("a b"), "'a b'");
    }

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn leaf_found_past_globals() {
        let cmd = Cli::command();
        let argv: Vec<String> =
            ["itscale", "--threads", "2", "analyze", "autocorr", "--max-lag", "5"].map(String::from).to_vec();
        assert_eq!(leaf_from_argv(&cmd, &argv).map(|c| c.get_name()), Some("autocorr"));
    }
}
