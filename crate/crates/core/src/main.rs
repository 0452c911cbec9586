use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sol_geodesics::closedform::{self, Geodesic};
use sol_geodesics::elliptic::{self, EllipticModulus};
use sol_geodesics::export::{self, fmt_human};
use sol_geodesics::flow::{self, uniform_times};
use sol_geodesics::model::NormalizedCovector;
use sol_geodesics::sphere::{self, SphereSpec};
use sol_geodesics::verify::{self, Suite};

const THREADS_VAR: &str = "SOL_GEODESICS_THREADS";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] sol_geodesics::Error),
    #[error("verification failed")]
    Verification,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Sub-Riemannian geodesics on SOLV⁻.
#[derive(Parser)]
#[command(name = "sol-geodesics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the geodesic from the identity with initial covector (a, b, ±pz0).
    Geodesic(GeodesicArgs),
    /// Run randomized invariant suites and print a JSON report.
    Verify(VerifyArgs),
    /// Sample a geodesic sphere over the (θ, μ) grid.
    Sphere(SphereArgs),
    /// Evaluate an elliptic function or integral.
    Elliptic(EllipticArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PzSign {
    #[value(name = "+")]
    Plus,
    #[value(name = "-")]
    Minus,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Closed,
    Ode,
    Both,
}

#[derive(Args)]
struct GeodesicArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, value_enum, default_value = "+", allow_hyphen_values = true)]
    pz_sign: PzSign,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    /// Number of equally spaced samples on [0, t-max].
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long, value_enum, default_value = "closed")]
    method: Method,
    /// Integrator tolerance for the ode method.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Trajectory CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metadata JSON; defaults to `<out>.json` when --out is given.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Elliptic,
    Conservation,
    Oracle,
    Symmetry,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CloudFormat {
    Csv,
    Obj,
    Json,
}

#[derive(Args)]
struct SphereArgs {
    /// Arc length of the sampled geodesics.
    #[arg(long)]
    r: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_max: Option<f64>,
    /// Grid size as `<n_theta>x<n_mu>`.
    #[arg(long, default_value = "32x32", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, value_enum, default_value = "csv")]
    format: CloudFormat,
    /// Emit e^z instead of z.
    #[arg(long)]
    exp_z: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EllipticFn {
    #[value(name = "sn")]
    Sn,
    #[value(name = "cn")]
    Cn,
    #[value(name = "dn")]
    Dn,
    #[value(name = "am")]
    Am,
    #[value(name = "F")]
    F,
    #[value(name = "E")]
    E,
}

#[derive(Args)]
struct EllipticArgs {
    #[arg(long = "fn", value_enum)]
    func: EllipticFn,
    /// Argument of sn, cn, dn, am.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// Amplitude for F, E.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Modulus, 0 <= k < 1.
    #[arg(long)]
    k: f64,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected <n>x<m>, got {s:?}"))?;
    let n = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
    let m = m.trim().parse().map_err(|e| format!("{m:?}: {e}"))?;
    Ok((n, m))
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => Ok(export::write_file(path, contents)?),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| {
                    CliError::Lib(sol_geodesics::Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
                })
        }
    }
}

fn cmd_geodesic(args: &GeodesicArgs) -> CliResult<()> {
    let s = args.a + args.b;
    if !(s.is_finite() && s.abs() <= 1.0) {
        return Err(CliError::Usage(format!(
            "inadmissible covector: need |a + b| <= 1, got |{} + {}| = {}",
            args.a,
            args.b,
            s.abs()
        )));
    }
    if !(args.t_max.is_finite() && args.t_max > 0.0) {
        return Err(CliError::Usage(format!("--t-max must be positive, got {}", args.t_max)));
    }
    if args.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let c = NormalizedCovector::from_ab(args.a, args.b, matches!(args.pz_sign, PzSign::Plus))?;
    let times = uniform_times(args.t_max, args.samples);
    let closed = || closedform::eval_trajectory(&c, &times);
    let ode = || flow::integrate_at(&c, &times, args.tol);
    let csv = match args.method {
        Method::Closed => export::trajectory_csv(&closed()?),
        Method::Ode => export::trajectory_csv(&ode()?),
        Method::Both => export::comparison_csv(&closed()?, &ode()?)?,
    };
    emit(args.out.as_deref(), &csv)?;

    let meta_path = args.meta.clone().or_else(|| {
        args.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = meta_path {
        let meta = Geodesic::new(&c)?.metadata(&c);
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        export::write_file(&path, &(json + "\n"))?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let suites: Vec<Suite> = match args.suite {
        SuiteArg::Elliptic => vec![Suite::Elliptic],
        SuiteArg::Conservation => vec![Suite::Conservation],
        SuiteArg::Oracle => vec![Suite::Oracle],
        SuiteArg::Symmetry => vec![Suite::Symmetry],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let report = verify::run(&suites, args.n, args.seed)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(args.out.as_deref(), &json)?;
    if report.passed {
        return Ok(());
    }
    for (suite, check) in report.failures() {
        eprintln!(
            "{suite}/{}: worst {} > {} at {}",
            check.name,
            fmt_human(check.worst),
            fmt_human(check.tolerance),
            check.worst_params
        );
    }
    for s in report.suites.iter().filter(|s| s.error_count > 0) {
        for e in &s.errors {
            eprintln!("{}: {} at {}", s.suite, e.message, e.params);
        }
    }
    Err(CliError::Verification)
}

fn cmd_sphere(args: &SphereArgs) -> CliResult<()> {
    let mut spec = SphereSpec::new(args.r).with_grid(args.grid.0, args.grid.1);
    spec.theta_range = (
        args.theta_min.unwrap_or(spec.theta_range.0),
        args.theta_max.unwrap_or(spec.theta_range.1),
    );
    spec.mu_range = (
        args.mu_min.unwrap_or(spec.mu_range.0),
        args.mu_max.unwrap_or(spec.mu_range.1),
    );
    let grid = sphere::sample_sphere(&spec)?;
    let text = match args.format {
        CloudFormat::Csv => export::sphere_csv(&grid, args.exp_z),
        CloudFormat::Obj => export::sphere_obj(&grid, args.exp_z),
        CloudFormat::Json => serde_json::to_string_pretty(&grid).expect("grid serializes") + "\n",
    };
    emit(args.out.as_deref(), &text)?;
    eprintln!(
        "{} nodes, {} fallback, {} failed",
        grid.points.len(),
        grid.fallbacks(),
        grid.failures()
    );
    for p in grid.points.iter().filter(|p| !p.is_ok()) {
        eprintln!(
            "  θ = {}, μ = {}: {}",
            fmt_human(p.theta),
            fmt_human(p.mu),
            p.error.as_deref().unwrap_or("")
        );
    }
    Ok(())
}

fn cmd_elliptic(args: &EllipticArgs) -> CliResult<()> {
    let m = EllipticModulus::new(args.k)?;
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--fn requires --{flag}")))
    };
    let value = match args.func {
        EllipticFn::F => elliptic::incomplete_f(need(args.phi, "phi")?, m)?,
        EllipticFn::E => elliptic::incomplete_e(need(args.phi, "phi")?, m)?,
        f => {
            let j = elliptic::jacobi(need(args.u, "u")?, m)?;
            match f {
                EllipticFn::Sn => j.sn,
                EllipticFn::Cn => j.cn,
                EllipticFn::Dn => j.dn,
                _ => j.am,
            }
        }
    };
    println!("{}", fmt_human(value));
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_VAR}={raw:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Geodesic(a) => cmd_geodesic(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sphere(a) => cmd_sphere(a),
        Command::Elliptic(a) => cmd_elliptic(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
