//! Command-line surface.
//!
//! Exit codes are stable: 0 success, 2 parse/usage errors, 3 solver errors,
//! 4 conjecture guard fired during a scan, 5 certificate verification
//! failure. No success path writes to the error stream.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::io::{
    bundled_fixtures, fixture, format_matrix, parse_matrix, parse_settings_file, write_result,
    OutputFormat, ResultDocument, Side,
};
use crate::lp::{
    auto_backend, backend_by_name, verify_model, verify_witness, LpProblem, SolveError,
    SolveResult, SolveStatus, SolverBackend, DEFAULT_TOLERANCE, DEFAULT_V_CAP,
};
use crate::predictions::{build_prediction_matrix, PredictionMatrix, Setting, SettingsSpec, Visibility};
use crate::scans::{run_even_spaced_scan, run_random_scan, AngleRange, ScanConfig, ScanReport};

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solver(SolveError),
    #[error("conjecture guard fired: a trial fell below 1/sqrt(2) - 1e-7")]
    GuardFired,
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) => 3,
            CliError::GuardFired => 4,
            CliError::Verification(_) => 5,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(err: SolveError) -> Self {
        match err {
            SolveError::InvalidProblem(_) | SolveError::UnknownBackend(_) => {
                CliError::Parse(err.to_string())
            }
            other => CliError::Solver(other),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "critvis",
    version,
    about = "Critical visibility of two-particle correlations under local hidden variable models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Upper bound on the visibility variable of the LP
    #[arg(long, global = true, default_value_t = DEFAULT_V_CAP)]
    v_cap: f64,
    /// Feasibility/optimality tolerance of the LP
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Worker threads for pricing (default: all cores); results do not
    /// depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random scans
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver backend
    #[arg(long, global = true, value_enum, default_value_t = Backend::Auto)]
    backend: Backend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl Format {
    fn output(self) -> OutputFormat {
        match self {
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Dense for small grids, column generation beyond
    Auto,
    Dense,
    ColumnGeneration,
}

impl Backend {
    /// Resolves against the backend registry; `auto` picks by grid size.
    fn resolve(self, n: usize, m: usize) -> Result<&'static dyn SolverBackend, SolveError> {
        match self {
            Backend::Auto => Ok(auto_backend(n, m)),
            Backend::Dense => backend_by_name("dense"),
            Backend::ColumnGeneration => backend_by_name("column-generation"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ideal quantum predictions for given measurement settings
    SolveSettings(SolveSettingsArgs),
    /// Solve a measured correlation matrix
    SolveData(SolveDataArgs),
    /// Evenly spaced NxN coplanar scan over a range of sizes
    ScanEven(ScanEvenArgs),
    /// Seeded random-settings campaign
    ScanRandom(ScanRandomArgs),
    /// List bundled data sets or print one as a matrix file
    Fixtures(FixturesArgs),
    /// Re-check the certificates embedded in a result document
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("a_side").required(true).args(["alpha", "a_file"])))]
#[command(group(ArgGroup::new("b_side").required(true).args(["beta", "b_file"])))]
struct SolveSettingsArgs {
    /// Comma-separated A-side angles
    #[arg(long, value_name = "LIST")]
    alpha: Option<String>,
    /// A-side settings file (angles-rad | angles-deg | vectors)
    #[arg(long, value_name = "FILE")]
    a_file: Option<PathBuf>,
    /// Comma-separated B-side angles
    #[arg(long, value_name = "LIST")]
    beta: Option<String>,
    /// B-side settings file
    #[arg(long, value_name = "FILE")]
    b_file: Option<PathBuf>,
    /// Interpret --alpha/--beta in degrees instead of radians
    #[arg(long)]
    degrees: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "fixture"])))]
struct SolveDataArgs {
    /// Matrix file (comma or whitespace delimited, '#' comments)
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Name of a bundled data set
    #[arg(long, value_name = "NAME")]
    fixture: Option<String>,
}

#[derive(Args)]
struct ScanEvenArgs {
    /// Grid sizes to scan, e.g. 2..7 (inclusive)
    #[arg(long, value_name = "A..B")]
    n_range: String,
    /// A-side angle range in radians (default 0..pi)
    #[arg(long, value_name = "LO..HI")]
    range_a: Option<String>,
    /// B-side angle range in radians (default 0..pi)
    #[arg(long, value_name = "LO..HI")]
    range_b: Option<String>,
}

#[derive(Args)]
struct ScanRandomArgs {
    /// Number of random trials
    #[arg(long, default_value_t = 1000)]
    count: u64,
    /// A-side settings per trial
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// B-side settings per trial
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Draw directions uniformly on the sphere instead of coplanar angles
    #[arg(long)]
    vectors: bool,
    /// A-side angle range in radians (default 0..pi; coplanar only)
    #[arg(long, value_name = "LO..HI")]
    range_a: Option<String>,
    /// B-side angle range in radians (default 0..pi; coplanar only)
    #[arg(long, value_name = "LO..HI")]
    range_b: Option<String>,
}

#[derive(Args)]
struct FixturesArgs {
    /// Print this bundled matrix instead of listing all of them
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Result document produced by a solve subcommand with --format json
    #[arg(long, value_name = "FILE")]
    result: PathBuf,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.global.threads {
        // First configuration wins; later calls in the same process no-op.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match cli.command {
        Command::SolveSettings(args) => solve_settings(&cli.global, args),
        Command::SolveData(args) => solve_data(&cli.global, args),
        Command::ScanEven(args) => scan_even(&cli.global, args),
        Command::ScanRandom(args) => scan_random(&cli.global, args),
        Command::Fixtures(args) => show_fixtures(&cli.global, args),
        Command::Verify(args) => verify_document(args),
    }
}

fn solve_settings(global: &GlobalOpts, args: SolveSettingsArgs) -> Result<(), CliError> {
    let a = side_settings(args.alpha.as_deref(), args.a_file.as_deref(), Side::A, args.degrees)?;
    let b = side_settings(args.beta.as_deref(), args.b_file.as_deref(), Side::B, args.degrees)?;
    let spec = SettingsSpec::new(a, b).map_err(|e| CliError::Parse(e.to_string()))?;
    let q = build_prediction_matrix(&spec).map_err(|e| CliError::Parse(e.to_string()))?;
    let result = solve(global, q.clone())?;
    print_result(global, &result, &q);
    Ok(())
}

fn solve_data(global: &GlobalOpts, args: SolveDataArgs) -> Result<(), CliError> {
    let q = match (&args.input, &args.fixture) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            parse_matrix(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => fixture(name).ok_or_else(|| {
            let known: Vec<&str> = bundled_fixtures().iter().map(|f| f.name).collect();
            CliError::Parse(format!(
                "unknown fixture '{name}' (available: {})",
                known.join(", ")
            ))
        })?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    let result = solve(global, q.clone())?;
    print_result(global, &result, &q);
    Ok(())
}

fn scan_even(global: &GlobalOpts, args: ScanEvenArgs) -> Result<(), CliError> {
    let (n_min, n_max) = parse_usize_range(&args.n_range)?;
    let mut cfg = ScanConfig::even_spaced(n_min, n_max);
    cfg.seed = global.seed;
    apply_scan_globals(&mut cfg, global, args.range_a.as_deref(), args.range_b.as_deref())?;
    let report = run_even_spaced_scan(&cfg).map_err(|e| CliError::Parse(e.to_string()))?;
    print_report(global, &report, true);
    guard(&report)
}

fn scan_random(global: &GlobalOpts, args: ScanRandomArgs) -> Result<(), CliError> {
    let mut cfg = if args.vectors {
        ScanConfig::random_vector(args.n, args.m, args.count, global.seed)
    } else {
        ScanConfig::random_coplanar(args.n, args.m, args.count, global.seed)
    };
    apply_scan_globals(&mut cfg, global, args.range_a.as_deref(), args.range_b.as_deref())?;
    let report = run_random_scan(&cfg).map_err(|e| CliError::Parse(e.to_string()))?;
    print_report(global, &report, false);
    guard(&report)
}

fn show_fixtures(global: &GlobalOpts, args: FixturesArgs) -> Result<(), CliError> {
    match args.name {
        Some(name) => {
            let matrix = fixture(&name)
                .ok_or_else(|| CliError::Parse(format!("unknown fixture '{name}'")))?;
            match global.format {
                Format::Text => print!("{}", format_matrix(&matrix)),
                Format::Json => {
                    let entries: Vec<Vec<f64>> = (0..matrix.rows())
                        .map(|i| (0..matrix.cols()).map(|j| matrix.get(i, j)).collect())
                        .collect();
                    let doc = serde_json::json!({
                        "name": name,
                        "rows": matrix.rows(),
                        "cols": matrix.cols(),
                        "entries": entries,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
                }
            }
        }
        None => match global.format {
            Format::Text => {
                for f in bundled_fixtures() {
                    println!("{}  {}x{}", f.name, f.matrix.rows(), f.matrix.cols());
                }
            }
            Format::Json => {
                let list: Vec<_> = bundled_fixtures()
                    .iter()
                    .map(|f| {
                        serde_json::json!({
                            "name": f.name,
                            "rows": f.matrix.rows(),
                            "cols": f.matrix.cols(),
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&list).expect("serializes")
                );
            }
        },
    }
    Ok(())
}

fn verify_document(args: VerifyArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.result)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.result.display())))?;
    let doc = ResultDocument::from_json(&text).map_err(|e| CliError::Parse(e.to_string()))?;

    let q = doc
        .reconstruct_matrix()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    if !doc.digest_matches().map_err(|e| CliError::Parse(e.to_string()))? {
        return Err(CliError::Verification(
            "input_digest: embedded matrix does not hash to matrix_sha256".into(),
        ));
    }

    let model = doc
        .reconstruct_model()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let model_check = verify_model(&model, &q);
    if !model_check.passed {
        return Err(CliError::Verification(format!(
            "model: max entry deviation {:.3e} (limit 1e-7), probability sum deviation {:.3e} (limit 1e-9)",
            model_check.max_entry_deviation, model_check.probability_sum_deviation
        )));
    }

    if doc.status == SolveStatus::Optimal {
        let witness = doc
            .reconstruct_witness()
            .map_err(|e| CliError::Parse(e.to_string()))?;
        let v = Visibility::new(doc.critical_v).map_err(|e| CliError::Parse(e.to_string()))?;
        let check = verify_witness(&witness, q.rows(), q.cols(), &q, v);
        if !check.passed {
            return Err(CliError::Verification(format!(
                "witness: LHV bound deviation {:.3e} (limit 1e-9), duality gap {:.3e} (limit 1e-7)",
                check.lhv_bound_deviation, check.duality_gap
            )));
        }
        println!("verification passed: model and witness consistent");
    } else {
        println!(
            "verification passed: model consistent (no witness required for status {})",
            doc.status
        );
    }
    Ok(())
}

fn side_settings(
    inline: Option<&str>,
    file: Option<&std::path::Path>,
    side: Side,
    degrees: bool,
) -> Result<Vec<Setting>, CliError> {
    match (inline, file) {
        (Some(list), None) => {
            let angles = parse_angle_list(list, degrees)?;
            angles
                .iter()
                .map(|&a| Setting::angle(a).map_err(|e| CliError::Parse(e.to_string())))
                .collect()
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            let parsed = parse_settings_file(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            if parsed.side != side {
                return Err(CliError::Parse(format!(
                    "{}: file declares side {}, expected side {side}",
                    path.display(),
                    parsed.side
                )));
            }
            Ok(parsed.settings)
        }
        _ => unreachable!("clap enforces exactly one per side"),
    }
}

fn parse_angle_list(list: &str, degrees: bool) -> Result<Vec<f64>, CliError> {
    let factor = if degrees { PI / 180.0 } else { 1.0 };
    list.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map(|v| v * factor)
                .map_err(|_| CliError::Parse(format!("'{tok}' is not an angle")))
        })
        .collect()
}

fn parse_usize_range(text: &str) -> Result<(usize, usize), CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Parse(format!("'{text}' is not a range (expected A..B)")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("'{lo}' is not an integer")))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("'{hi}' is not an integer")))?;
    Ok((lo, hi))
}

fn parse_angle_range(text: &str) -> Result<AngleRange, CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Parse(format!("'{text}' is not a range (expected LO..HI)")))?;
    let start = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("'{lo}' is not an angle")))?;
    let end = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("'{hi}' is not an angle")))?;
    Ok(AngleRange { start, end })
}

fn apply_scan_globals(
    cfg: &mut ScanConfig,
    global: &GlobalOpts,
    range_a: Option<&str>,
    range_b: Option<&str>,
) -> Result<(), CliError> {
    cfg.v_cap = global.v_cap;
    cfg.tolerance = global.tolerance;
    if let Some(text) = range_a {
        cfg.range_a = parse_angle_range(text)?;
    }
    if let Some(text) = range_b {
        cfg.range_b = parse_angle_range(text)?;
    }
    Ok(())
}

fn solve(global: &GlobalOpts, q: PredictionMatrix) -> Result<SolveResult, CliError> {
    let (n, m) = (q.rows(), q.cols());
    let prob = LpProblem::new(q)
        .with_v_cap(global.v_cap)?
        .with_tolerance(global.tolerance)?;
    let backend = global.backend.resolve(n, m)?;
    Ok(backend.solve(&prob)?)
}

fn print_result(global: &GlobalOpts, result: &SolveResult, q: &PredictionMatrix) {
    let doc = ResultDocument::from_result(result, q);
    print!("{}", ensure_newline(write_result(&doc, global.format.output())));
}

fn print_report(global: &GlobalOpts, report: &ScanReport, per_trial: bool) {
    match global.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(report).expect("report serializes")
        ),
        Format::Text => print!("{}", render_scan_text(report, per_trial)),
    }
}

fn render_scan_text(report: &ScanReport, per_trial: bool) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let cfg_line = serde_json::to_string(&report.config.kind).expect("kind serializes");
    writeln!(out, "scan: {cfg_line} seed={}", report.config.seed).unwrap();
    if per_trial {
        for r in &report.records {
            match r.critical_v {
                Some(v) => writeln!(
                    out,
                    "  trial {:>4}: V* = {:.9}  {}  chsh_subset={}",
                    r.trial,
                    v,
                    r.status,
                    if r.chsh_subset.is_some() { "yes" } else { "no" }
                )
                .unwrap(),
                None => writeln!(out, "  trial {:>4}: {}", r.trial, r.status).unwrap(),
            }
        }
    }
    let s = &report.summary;
    writeln!(
        out,
        "trials: {}  solved: {}  errors: {}",
        s.trials, s.solved, s.errored
    )
    .unwrap();
    if let (Some(min), Some(max), Some(mean)) = (s.min_v, s.max_v, s.mean_v) {
        writeln!(
            out,
            "V*: min {:.9}  max {:.9}  mean {:.9}",
            min, max, mean
        )
        .unwrap();
    }
    writeln!(out, "below conjecture bound: {}", s.below_conjecture_count).unwrap();
    if s.violations.is_empty() {
        writeln!(out, "violations: none").unwrap();
    } else {
        writeln!(out, "violations: {}", s.violations.len()).unwrap();
        for v in &s.violations {
            writeln!(out, "  trial {}: {:?}: {}", v.trial, v.kind, v.detail).unwrap();
        }
    }
    out
}

fn guard(report: &ScanReport) -> Result<(), CliError> {
    if report.conjecture_guard_fired() {
        Err(CliError::GuardFired)
    } else {
        Ok(())
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}
