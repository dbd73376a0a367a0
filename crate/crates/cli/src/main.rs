//! `engel`: classify covectors, trace and validate extremals, and dump polar
//! curves for a control region given as JSON.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use engel_core::{
    classify, solver::trace_on, validate, ControlRegion, Covector, Error, FamilySchedule, PolarCurve, RegionSpec,
    ScheduleEntry, SelectorPolicy, Tolerances, TraceOptions, Trajectory, ValidationReport,
};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "engel", version, about = "Extremals of sub-Finsler metrics on the Engel group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a covector and print the report as JSON.
    Classify(Common),
    /// Trace an extremal, write the samples and a validation sidecar.
    Trace(TraceArgs),
    /// Validate a trajectory file, or a fresh trace when no file is given.
    Validate(ValidateArgs),
    /// Sample the polar curve of the region.
    Polar(PolarArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Control-region JSON file.
    #[arg(long)]
    region: PathBuf,
    /// Initial covector `φ1,φ2,φ3,φ4`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "phi_grid")]
    phi: Option<String>,
    /// Rescale a normal covector onto the polar curve first.
    #[arg(long)]
    normalize: bool,
    /// Text file with one covector `a,b,c,d` per line; runs them concurrently.
    #[arg(long, conflicts_with = "phi")]
    phi_grid: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectories default to csv; reports are always JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Clone)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Time horizon, either sign.
    #[arg(long = "T", allow_hyphen_values = true, default_value_t = 1.0)]
    horizon: f64,
    /// Number of samples including both ends.
    #[arg(long, default_value_t = 1001)]
    n: usize,
    /// Control on flat faces of `∂U`: midpoint, min, max or fraction:<w>.
    #[arg(long, default_value = "midpoint", value_parser = parse_selector)]
    selector: SelectorPolicy,
    /// JSON file holding a list of `{"endpoint","dwell","reflect","shift_k"}` entries.
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    trace: TraceArgs,
    /// Trajectory CSV produced by `trace`.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct PolarArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CovectorNotOnPolar { .. } | Error::AbnormalWithNonzeroH { .. } => 2,
            Error::ZeroCovector => 3,
            Error::DivergentIntegral { .. } | Error::ScheduleInvalid(_) => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse_selector(s: &str) -> std::result::Result<SelectorPolicy, String> {
    match s {
        "midpoint" => Ok(SelectorPolicy::Midpoint),
        "min" => Ok(SelectorPolicy::Min),
        "max" => Ok(SelectorPolicy::Max),
        _ => match s.strip_prefix("fraction:") {
            Some(w) => w.parse().map(SelectorPolicy::Fraction).map_err(|e| format!("selector fraction: {e}")),
            None => Err(format!("unknown selector `{s}` (midpoint, min, max or fraction:<w>)")),
        },
    }
}

fn parse_phi(s: &str) -> Outcome<Covector> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Failure::io(format!("--phi: expected four comma-separated numbers, got `{s}`")));
    }
    let mut phi = [0.0_f64; 4];
    for (k, p) in parts.iter().enumerate() {
        phi[k] = p.parse().map_err(|e| Failure::io(format!("--phi: component phi{} `{p}`: {e}", k + 1)))?;
    }
    if phi.iter().any(|c| !c.is_finite()) {
        return Err(Failure::io(format!("--phi: components must be finite, got `{s}`")));
    }
    Ok(Covector::from_array(phi))
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                // a closed pipe downstream (`| head`) is not an error of ours
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn load_polar(path: &Path) -> Outcome<PolarCurve> {
    let spec: RegionSpec = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::io(format!("region file {}: {e}", path.display())))?;
    let region = ControlRegion::from_spec(spec).map_err(|e| Failure::io(format!("region file {}: {e}", path.display())))?;
    region.polar().map_err(|e| Failure::io(format!("region file {}: {e}", path.display())))
}

fn covectors(common: &Common) -> Outcome<Vec<Covector>> {
    if let Some(grid) = &common.phi_grid {
        let text = read(grid)?;
        let list: Vec<Covector> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(parse_phi)
            .collect::<Outcome<_>>()?;
        if list.is_empty() {
            return Err(Failure::io(format!("{}: no covectors", grid.display())));
        }
        return Ok(list);
    }
    parse_phi(common.phi.as_deref().unwrap_or_default()).map(|p| vec![p])
}

fn trace_options(args: &TraceArgs) -> Outcome<TraceOptions> {
    if args.n < 2 {
        return Err(Failure::io(format!("--n must be at least 2, got {}", args.n)));
    }
    if args.horizon == 0.0 || !args.horizon.is_finite() {
        return Err(Failure::io(format!("--T must be finite and nonzero, got {}", args.horizon)));
    }
    let mut opts = TraceOptions::new(args.horizon, args.n)
        .with_selector(args.selector.clone())
        .normalized(args.common.normalize);
    if let Some(path) = &args.schedule {
        let entries: Vec<ScheduleEntry> = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::io(format!("schedule file {}: {e}", path.display())))?;
        opts = opts.with_schedule(FamilySchedule::new(entries));
    }
    Ok(opts)
}

/// `traj.csv` → `traj.validation.json`.
fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("validation.json")
}

/// `traj.csv` with index 3 → `traj_0003.csv`.
fn indexed_path(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{k:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{k:04}"),
    };
    out.with_file_name(name)
}

#[derive(Serialize)]
struct ErrorEntry {
    phi: Covector,
    error: String,
    exit_code: u8,
}

fn run_classify(common: &Common) -> Outcome<()> {
    if common.format == Some(Format::Csv) {
        return Err(Failure::io("--format: classify reports are JSON only"));
    }
    let polar = load_polar(&common.region)?;
    let phis = covectors(common)?;
    if common.phi_grid.is_none() {
        let class = classify(phis[0], &polar, common.normalize)?;
        return write(common.out.as_deref(), &output::pretty(&class));
    }
    let reports: Vec<serde_json::Value> = phis
        .par_iter()
        .map(|&phi| match classify(phi, &polar, common.normalize) {
            Ok(class) => serde_json::to_value(class).expect("report serializes"),
            Err(e) => {
                let f = Failure::from(e);
                serde_json::to_value(ErrorEntry { phi, error: f.message, exit_code: f.code }).expect("serializes")
            }
        })
        .collect();
    write(common.out.as_deref(), &output::pretty(&reports))
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    class: &'a engel_core::ExtremalClass,
    samples: serde_json::Value,
    validation: &'a ValidationReport,
}

fn trace_one(phi: Covector, polar: &PolarCurve, opts: &TraceOptions) -> Outcome<(Trajectory, ValidationReport)> {
    let tr = trace_on(phi, polar, opts)?;
    let report = validate(&tr, polar.region(), &Tolerances::default());
    Ok((tr, report))
}

/// Writes one trajectory and its report; returns the validation exit code.
fn emit_trace(tr: &Trajectory, report: &ValidationReport, out: Option<&Path>, format: Format) -> Outcome<u8> {
    match format {
        Format::Csv => {
            write(out, &output::trace_csv(tr))?;
            match out {
                Some(p) => write(Some(&sidecar_path(p)), &output::pretty(report))?,
                None => eprint!("{}", output::pretty(report)),
            }
        }
        Format::Json => {
            let doc = TraceDocument { class: &tr.class, samples: output::trace_json_samples(tr), validation: report };
            write(out, &output::pretty(&doc))?;
        }
    }
    Ok(if report.passed { 0 } else { 5 })
}

fn run_trace(args: &TraceArgs) -> Outcome<u8> {
    let polar = load_polar(&args.common.region)?;
    let opts = trace_options(args)?;
    let phis = covectors(&args.common)?;
    let format = args.common.format.unwrap_or(Format::Csv);
    if args.common.phi_grid.is_none() {
        let (tr, report) = trace_one(phis[0], &polar, &opts)?;
        let code = emit_trace(&tr, &report, args.common.out.as_deref(), format)?;
        if code != 0 {
            eprintln!("validation failed: {}", report.failures.join("; "));
        }
        return Ok(code);
    }
    let out = args
        .common
        .out
        .as_deref()
        .ok_or_else(|| Failure::io("--phi-grid with trace needs --out as a file name template"))?;
    let results: Vec<Outcome<(Trajectory, ValidationReport)>> = phis.par_iter().map(|&phi| trace_one(phi, &polar, &opts)).collect();
    let mut worst = 0;
    for (k, result) in results.into_iter().enumerate() {
        let code = match result {
            Ok((tr, report)) => emit_trace(&tr, &report, Some(&indexed_path(out, k)), format)?,
            Err(f) => {
                eprintln!("covector {k}: {}", f.message);
                f.code
            }
        };
        worst = worst.max(code);
    }
    Ok(worst)
}

fn run_validate(args: &ValidateArgs) -> Outcome<u8> {
    let common = &args.trace.common;
    let Some(input) = &args.input else {
        let polar = load_polar(&common.region)?;
        let opts = trace_options(&args.trace)?;
        let (_, report) = trace_one(covectors(common)?[0], &polar, &opts)?;
        write(common.out.as_deref(), &output::pretty(&report))?;
        return Ok(if report.passed { 0 } else { 5 });
    };
    let polar = load_polar(&common.region)?;
    let phi = parse_phi(common.phi.as_deref().ok_or_else(|| Failure::io("validate --input needs --phi"))?)?;
    let class = classify(phi, &polar, common.normalize)?;
    let m = if class.is_normal() { 1.0 } else { 0.0 };
    let cas = class.casimir();
    let samples = output::parse_trace_csv(&read(input)?, cas.e, m).map_err(|e| Failure::io(format!("{}: {e}", input.display())))?;
    let tr = Trajectory { phi: class.phi, class, samples };
    let report = validate(&tr, polar.region(), &Tolerances::default());
    write(common.out.as_deref(), &output::pretty(&report))?;
    if !report.passed {
        eprintln!("validation failed: {}", report.failures.join("; "));
    }
    Ok(if report.passed { 0 } else { 5 })
}

fn run_polar(args: &PolarArgs) -> Outcome<()> {
    if args.n < 2 {
        return Err(Failure::io(format!("--n must be at least 2, got {}", args.n)));
    }
    let polar = load_polar(&args.region)?;
    let rows = output::polar_rows(&polar, args.n);
    let text = match args.format {
        Format::Csv => output::polar_csv(&rows),
        Format::Json => output::pretty(&output::polar_json(&rows)),
    };
    write(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(c) => run_classify(c).map(|_| 0),
        Command::Trace(t) => run_trace(t),
        Command::Validate(v) => run_validate(v),
        Command::Polar(p) => run_polar(p).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
