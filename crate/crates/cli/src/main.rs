use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hermlab::connections::ConnectionSpec;
use hermlab::dsl::DslMetric;
use hermlab::dump::{dump_tensors, DumpFormat};
use hermlab::error::Error;
use hermlab::metric::{hermitian_defect, ChartPoint, HermitianForm, MetricField};
use hermlab::models::{resolve_model, ModelParams};
use hermlab::sampling::hopf_annulus;
use hermlab::solver::{family_by_name, solve, AnsatzProblem, ObjectiveKind};
use hermlab::suite::{run_suite, SuiteConfig};
use hermlab::tensor::C64;

#[derive(Parser)]
#[command(
    name = "hermlab",
    version,
    about = "Curvature identities of Hermitian metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite on one model and write a JSON report.
    Check(CheckArgs),
    /// Dump curvature tensors at one point.
    Curvature(CurvatureArgs),
    /// Solve an ansatz problem over a parametric family.
    Solve(SolveArgs),
    /// Parse a metric file and probe it for positivity.
    Parse(ParseArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CheckArgs {
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    /// Connection to test; repeatable. Defaults to a fixed set.
    #[arg(long = "connection")]
    connections: Vec<String>,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 8)]
    fd_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol_analytic: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol_fd: f64,
    /// Record wall-clock time (makes the report run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CurvatureArgs {
    #[arg(long)]
    model: String,
    /// Defaults to the dimension of the point.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    /// Comma-separated coordinates; `a+bi` or `a` per entry.
    #[arg(long)]
    point: String,
    #[arg(long = "connection", default_value = "chern")]
    connections: Vec<String>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "gauduchon-flat")]
    objective: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Fixes the first family parameter.
    #[arg(long)]
    scale: Option<f64>,
    /// Fixes the Einstein constant of the real-chern-einstein objective.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    file: PathBuf,
    /// Probe Hermitian symmetry and positivity on sample points.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure kinds mapped onto exit codes 1 and 2.
enum Failure {
    Checks,
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Config(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_coord(s: &str) -> Option<C64> {
    let s = s.trim().replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Some(C64::new(v, 0.0));
    }
    let body = s.strip_suffix('i')?;
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let cut = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match cut {
        Some(k) => {
            let re = body[..k].parse().ok()?;
            let im = match &body[k..] {
                "+" => 1.0,
                "-" => -1.0,
                v => v.parse().ok()?,
            };
            Some(C64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                v => v.parse().ok()?,
            };
            Some(C64::new(0.0, im))
        }
    }
}

fn parse_point(s: &str) -> Result<ChartPoint, Failure> {
    let coords = s
        .split(',')
        .map(|c| parse_coord(c).ok_or_else(|| Failure::Config(format!("bad coordinate `{c}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChartPoint::new(coords)?)
}

fn check(a: CheckArgs) -> Result<(), Failure> {
    let mut cfg = SuiteConfig {
        model: a.model,
        n: a.n,
        lambda: a.lambda,
        mu: a.mu,
        t: a.t,
        scale: a.scale,
        points: a.points,
        fd_points: a.fd_points,
        seed: a.seed,
        tol_analytic: a.tol_analytic,
        tol_fd: a.tol_fd,
        ..SuiteConfig::default()
    };
    if !a.connections.is_empty() {
        cfg.connections = a.connections;
    }
    let start = Instant::now();
    let mut report = run_suite(&cfg)?;
    if a.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    for c in &report.checks {
        eprintln!(
            "{} {:<32} {:>10.3e} (tol {:.1e}, {} pts)",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.max_residual,
            c.tolerance,
            c.points
        );
    }
    emit(&a.out, &report.to_json())?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn curvature(a: CurvatureArgs) -> Result<(), Failure> {
    let format: DumpFormat = a.format.parse()?;
    let z = parse_point(&a.point)?;
    let params = ModelParams {
        n: a.n.unwrap_or(z.dim()),
        lambda: a.lambda,
        t: a.t,
        scale: a.scale,
    };
    let model = resolve_model(&a.model, &params)?;
    if z.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: z.dim(),
        }
        .into());
    }
    let specs = a
        .connections
        .iter()
        .flat_map(|s| s.split(';'))
        .map(ConnectionSpec::parse)
        .collect::<Result<Vec<_>, _>>()?;
    emit(&a.out, &dump_tensors(model.as_ref(), &z, &specs, format)?)
}

fn solve_cmd(a: SolveArgs) -> Result<(), Failure> {
    let family = family_by_name(&a.family, a.n)?;
    let kind = match a.objective.as_str() {
        "gauduchon-flat" => ObjectiveKind::GauduchonFlat(a.t),
        "real-chern-einstein" => ObjectiveKind::RealChernEinstein(a.lambda),
        other => return Err(Failure::Config(format!("unknown objective `{other}`"))),
    };
    let mut prob = AnsatzProblem::new(family, kind, a.seed);
    prob.tolerance = a.tol;
    if let Some(s) = a.scale {
        prob = prob.fix_parameter(0, s);
    }
    let sol = solve(&prob)?;
    let names = prob.parameter_names();
    let params: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(&sol.params)
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let out = json!({
        "family": a.family,
        "n": a.n,
        "objective": kind,
        "parameters": params,
        "solution": sol,
    });
    let mut text = serde_json::to_string_pretty(&out).expect("solution serializes");
    text.push('\n');
    emit(&a.out, &text)?;
    if sol.converged {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn parse_cmd(a: ParseArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| Failure::Config(format!("{}: {e}", a.file.display())))?;
    let m = DslMetric::from_text(&text)?;
    let n = m.dim();
    println!("name: {}", m.name());
    println!("dim: {n}");
    for i in 0..n {
        for j in i..n {
            println!("h[{}][{}] = {}", i + 1, j + 1, m.spec().full_entry(i, j));
        }
    }
    if !a.check {
        return Ok(());
    }
    let (mut tested, mut bad) = (0, 0);
    let mut min_eig = f64::INFINITY;
    let mut worst_sym: f64 = 0.0;
    for z in hopf_annulus(n, a.points, a.seed) {
        if !m.admissible(&z) {
            continue;
        }
        tested += 1;
        let h = m.metric(&z)?;
        worst_sym = worst_sym.max(hermitian_defect(&h));
        match HermitianForm::new(h) {
            Ok(f) if f.is_positive() => min_eig = min_eig.min(f.min_eigenvalue()),
            _ => bad += 1,
        }
    }
    println!("points: {tested}");
    println!("hermitian defect: {worst_sym:e}");
    println!("min eigenvalue: {min_eig:e}");
    println!("non-positive points: {bad}");
    if bad == 0 && tested > 0 {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("HERMLAB_THREADS") {
        let k: usize = v.parse().ok().filter(|&k| k >= 1).ok_or_else(|| {
            Failure::Config(format!(
                "HERMLAB_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Check(a) => check(a),
        Command::Curvature(a) => curvature(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Parse(a) => parse_cmd(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
