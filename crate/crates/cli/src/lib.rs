//! Command-line front end: argument parsing, configuration, and artifacts.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ckstab::dynamics::{simulate, Trajectory};
use ckstab::fraccalc::{ck_derivative, katugampola_integral, SampledFunction, WGrid};
use ckstab::nonlinear::Nonlinearity;
use ckstab::perron::{certify, CertifyOptions, ContractionCertificate};
use ckstab::specfun::{mittag_leffler_detailed, MLParams};
use ckstab::spectral::{eigenvalues, sector_check, Verdict};
use ckstab::FracOrder;
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use config::{build_nonlinearity, resolve_system, ConfigError, NonlinearitySpec, SystemConfig};
use output::{series_csv, to_json, trajectory_csv, Sink};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
/// Unstable spectrum or invalid certificate.
pub const EXIT_NEGATIVE: i32 = 2;
/// Eigenvalue within the boundary tolerance of the sector.
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Numeric {
        context: &'static str,
        #[source]
        source: ckstab::Error,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        }
    }
}

trait Context<T> {
    fn context(self, context: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for ckstab::Result<T> {
    fn context(self, context: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { context, source })
    }
}

/// Fractional stability toolkit: Mittag-Leffler functions,
/// Caputo-Katugampola operators, sector tests and contraction certificates.
#[derive(Debug, Parser)]
#[command(name = "ckstab", version)]
pub struct Cli {
    /// Directory for CSV/JSON artifacts (overridden by CKSTAB_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for all sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate E_{α,β}(z).
    Ml {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "re", allow_negative_numbers = true)]
        re: f64,
        #[arg(long = "im", default_value_t = 0.0, allow_negative_numbers = true)]
        im: f64,
    },
    /// Katugampola integral of a sampled function (CSV `t,value`).
    Fracint(SeriesArgs),
    /// Caputo-Katugampola derivative of a sampled function (CSV `t,value`).
    Fracderiv {
        #[command(flatten)]
        series: SeriesArgs,
        /// Katugampola derivative without subtracting f(t0).
        #[arg(long)]
        no_caputo: bool,
    },
    /// Eigenvalues of a matrix.
    Eigen {
        #[command(flatten)]
        matrix: MatrixArg,
    },
    /// Sector test |arg λ| > απ/2 for every eigenvalue.
    CheckStability {
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long)]
        alpha: f64,
    },
    /// Simulate a system from a built-in name or configuration file.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Initial state as a comma-separated list.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
    },
    /// Contraction certificate for the zero solution.
    Certify {
        #[command(flatten)]
        system: SystemArgs,
        /// Matrix to use instead of the system's closed-loop matrix.
        #[arg(long)]
        matrix: Option<String>,
        /// Built-in nonlinearity for --matrix: zero or lorenz-g.
        #[arg(long, default_value = "zero")]
        nonlinearity: String,
        /// Ball radius in modal coordinates.
        #[arg(long)]
        radius: f64,
        /// Pairs sampled for the Lipschitz estimate.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        /// Known Lipschitz constant of the transformed nonlinearity.
        #[arg(long)]
        lipschitz: Option<f64>,
    },
    /// The feedback-stabilized Lorenz system.
    DemoLorenz {
        #[arg(long, default_value_t = 8192)]
        steps: usize,
        /// Also certify with this radius.
        #[arg(long)]
        certify: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct SeriesArgs {
    /// CSV file with columns t,value (header optional).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Base time; defaults to the first sample time.
    #[arg(long)]
    t0: Option<f64>,
}

#[derive(Debug, Args)]
struct MatrixArg {
    /// Inline JSON rows (`[[1,0],[0,1]]`) or a CSV file of rows.
    #[arg(long)]
    matrix: String,
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Built-in system name or configuration file.
    #[arg(long, default_value = "lorenz")]
    system: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
}

impl SystemArgs {
    fn load(&self) -> Result<SystemConfig, CliError> {
        let mut cfg = resolve_system(&self.system)?;
        if let Some(a) = self.alpha {
            cfg.order.alpha = a;
        }
        if let Some(r) = self.rho {
            cfg.order.rho = r;
        }
        if let Some(t) = self.t0 {
            cfg.order.t0 = t;
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Reports go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let sink = Sink::new(cli.out.clone());
    match &cli.command {
        Command::Ml { alpha, beta, re, im } => ml(&sink, *alpha, *beta, Complex64::new(*re, *im)),
        Command::Fracint(s) => series(&sink, s, None),
        Command::Fracderiv { series: s, no_caputo } => series(&sink, s, Some(!no_caputo)),
        Command::Eigen { matrix } => eigen(&sink, &parse_matrix(&matrix.matrix)?),
        Command::CheckStability { matrix, alpha } => check_stability(&sink, &parse_matrix(&matrix.matrix)?, *alpha),
        Command::Simulate { system, horizon, steps, x0 } => {
            let mut cfg = system.load()?;
            if let Some(h) = horizon {
                cfg.simulation.horizon = *h;
            }
            if let Some(s) = steps {
                cfg.simulation.steps = *s;
            }
            if let Some(x) = x0 {
                cfg.simulation.x0 = x.clone();
            }
            cfg.validate()?;
            simulate_command(&sink, &cfg)
        }
        Command::Certify {
            system,
            matrix,
            nonlinearity,
            radius,
            samples,
            lipschitz,
        } => {
            let cfg = system.load()?;
            cfg.validate()?;
            let (a, f) = match matrix {
                Some(m) => {
                    let a = parse_matrix(m)?;
                    let f = build_nonlinearity(&NonlinearitySpec::Named(nonlinearity.clone()), a.nrows())?;
                    (a, f)
                }
                None => (cfg.closed_loop()?, cfg.nonlinearity()?),
            };
            let opts = CertifyOptions {
                lipschitz_samples: *samples,
                seed: cli.seed,
                lipschitz_override: *lipschitz,
                jordan_hint: None,
            };
            certify_command(&sink, &a, f, &cfg.order()?, *radius, &opts)
        }
        Command::DemoLorenz { steps, certify } => demo_lorenz(&sink, *steps, *certify, cli.seed),
    }
}

/// Inline JSON rows, or a CSV file with one matrix row per line.
pub fn parse_matrix(arg: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = if arg.trim_start().starts_with('[') {
        serde_json::from_str(arg).map_err(|e| CliError::Usage(format!("--matrix: {e}")))?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(arg)
            .map_err(|e| CliError::Usage(format!("--matrix {arg}: {e}")))?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("--matrix {arg}: {e}")))?;
            rows.push(row);
        }
        rows
    };
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Usage("--matrix: expected a non-empty square matrix".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("--matrix: entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn emit<T: Serialize>(sink: &Sink, name: &str, value: &T) -> Result<(), CliError> {
    let json = to_json(value)?;
    sink.write(name, &json)?;
    print!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct MlReport {
    alpha: f64,
    beta: f64,
    z: Complex64,
    value: Complex64,
    error_estimate: f64,
    regime: ckstab::specfun::Regime,
}

fn ml(sink: &Sink, alpha: f64, beta: f64, z: Complex64) -> Result<i32, CliError> {
    let p = MLParams::new(alpha, beta).map_err(|e| CliError::Usage(e.to_string()))?;
    let v = mittag_leffler_detailed(p, z).context("Mittag-Leffler evaluation")?;
    emit(
        sink,
        "ml.json",
        &MlReport {
            alpha,
            beta,
            z,
            value: v.value,
            error_estimate: v.error,
            regime: v.regime,
        },
    )?;
    Ok(EXIT_OK)
}

fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("--input {}: {e}", path.display())))?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parsed: Option<(f64, f64)> = match (rec.get(0), rec.get(1)) {
            (Some(a), Some(b)) => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) => {
                t.push(a);
                v.push(b);
            }
            // a header line
            None if i == 0 => {}
            None => {
                return Err(CliError::Usage(format!(
                    "--input {}: line {} is not a `t,value` pair",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((t, v))
}

fn series(sink: &Sink, args: &SeriesArgs, caputo: Option<bool>) -> Result<i32, CliError> {
    let (t, v) = read_series(&args.input)?;
    let t0 = args.t0.or(t.first().copied()).ok_or_else(|| CliError::Usage("--input has no samples".into()))?;
    let order = match caputo {
        None => FracOrder::new(args.alpha, args.rho, t0),
        Some(_) => FracOrder::caputo(args.alpha, args.rho, t0),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = WGrid::from_times(&order, &t).context("input grid")?;
    let f = SampledFunction::new(grid, v).context("input samples")?;
    let (out, name, column) = match caputo {
        None => (katugampola_integral(&f, &order, args.alpha).context("fractional integral")?, "fracint.csv", "integral"),
        Some(c) => (ck_derivative(&f, &order, c).context("fractional derivative")?, "fracderiv.csv", "derivative"),
    };
    let csv = series_csv(&t, out.values(), column)?;
    sink.write(name, &csv)?;
    print!("{csv}");
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EigenReport {
    dim: usize,
    eigenvalues: Vec<Complex64>,
}

fn eigen(sink: &Sink, a: &DMatrix<f64>) -> Result<i32, CliError> {
    let eigenvalues = eigenvalues(a).context("eigenvalues")?;
    emit(sink, "eigenvalues.json", &EigenReport { dim: a.nrows(), eigenvalues })?;
    Ok(EXIT_OK)
}

pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Stable => EXIT_OK,
        Verdict::Unstable => EXIT_NEGATIVE,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn check_stability(sink: &Sink, a: &DMatrix<f64>, alpha: f64) -> Result<i32, CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0,1), got {alpha}")));
    }
    let report = sector_check(a, alpha).context("sector test")?;
    emit(sink, "spectral_report.json", &report)?;
    Ok(verdict_code(report.verdict))
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    system: &'a str,
    alpha: f64,
    rho: f64,
    t0: f64,
    horizon: f64,
    steps: usize,
    x0: &'a [f64],
    sup_norm: f64,
    /// Time where the sup norm is attained.
    sup_norm_t: f64,
    final_norm: f64,
    diverged: bool,
    diverged_at_t: Option<f64>,
}

fn summarize<'a>(cfg: &'a SystemConfig, tr: &Trajectory) -> SimulationSummary<'a> {
    SimulationSummary {
        system: &cfg.name,
        alpha: cfg.order.alpha,
        rho: cfg.order.rho,
        t0: cfg.order.t0,
        horizon: cfg.simulation.horizon,
        steps: cfg.simulation.steps,
        x0: &cfg.simulation.x0,
        sup_norm: tr.sup_norm,
        sup_norm_t: tr.t_nodes[tr.argmax_norm()],
        final_norm: tr.final_norm(),
        diverged: tr.diverged_at.is_some(),
        diverged_at_t: tr.diverged_at.map(|k| tr.order.t_of_w(tr.grid.w(k))),
    }
}

fn run_simulation(cfg: &SystemConfig) -> Result<Trajectory, CliError> {
    let a = cfg.closed_loop()?;
    let f = cfg.nonlinearity()?;
    let s = &cfg.simulation;
    simulate(&a, f.as_ref(), &s.x0, &cfg.order()?, s.horizon, s.steps).context("simulation")
}

/// With an artifact directory the CSV goes there and the summary to stdout;
/// otherwise the CSV goes to stdout and the summary to stderr.
fn simulate_command(sink: &Sink, cfg: &SystemConfig) -> Result<i32, CliError> {
    let tr = run_simulation(cfg)?;
    let csv = trajectory_csv(&tr)?;
    let summary = to_json(&summarize(cfg, &tr))?;
    if sink.dir().is_some() {
        sink.write("trajectory.csv", &csv)?;
        sink.write("summary.json", &summary)?;
        print!("{summary}");
    } else {
        print!("{csv}");
        eprint!("{summary}");
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Rejection {
    verdict: Verdict,
    margin: Option<f64>,
    message: String,
}

fn certify_command(
    sink: &Sink,
    a: &DMatrix<f64>,
    f: Arc<dyn Nonlinearity>,
    order: &FracOrder,
    radius: f64,
    opts: &CertifyOptions,
) -> Result<i32, CliError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Usage(format!("--radius must be positive, got {radius}")));
    }
    match certify(a, f, order, radius, opts) {
        Ok(cert) => {
            emit(sink, "certificate.json", &cert)?;
            Ok(if cert.valid { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Err(e @ ckstab::Error::UnstableSpectrum { margin }) => {
            let r = Rejection { verdict: Verdict::Unstable, margin: Some(margin), message: e.to_string() };
            emit(sink, "certificate.json", &r)?;
            Ok(EXIT_NEGATIVE)
        }
        Err(e @ ckstab::Error::BoundaryInconclusive { .. }) => {
            let r = Rejection { verdict: Verdict::Inconclusive, margin: None, message: e.to_string() };
            emit(sink, "certificate.json", &r)?;
            Ok(EXIT_INCONCLUSIVE)
        }
        Err(source) => Err(CliError::Numeric { context: "certificate", source }),
    }
}

#[derive(Serialize)]
struct DemoReport<'a> {
    closed_loop: Vec<Vec<f64>>,
    spectral: &'a ckstab::spectral::SpectralReport,
    simulation: SimulationSummary<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a ContractionCertificate>,
}

fn demo_lorenz(sink: &Sink, steps: usize, radius: Option<f64>, seed: u64) -> Result<i32, CliError> {
    let mut cfg = SystemConfig::builtin("lorenz")?;
    cfg.simulation.steps = steps;
    cfg.validate()?;
    let a = cfg.closed_loop()?;
    let order = cfg.order()?;
    println!("Lorenz system with feedback u = BKx, alpha = {}, rho = {}, t0 = {}", order.alpha, order.rho, order.t0);
    println!("A + BK =");
    for i in 0..3 {
        println!("  [{:8.3} {:8.3} {:8.3}]", a[(i, 0)], a[(i, 1)], a[(i, 2)]);
    }
    let report = sector_check(&a, order.alpha).context("sector test")?;
    let eigs: Vec<String> = report.eigenvalues.iter().map(|z| format_complex(*z)).collect();
    println!("eigenvalues: {}", eigs.join(", "));
    println!(
        "sector test: {:?} (min |arg| - alpha*pi/2 = {:.4})",
        report.verdict, report.margin
    );
    let tr = run_simulation(&cfg)?;
    let summary = summarize(&cfg, &tr);
    println!(
        "simulation from x0 = {:?} on [{}, {}] with {} steps: |x(t0)| = {:.4e}, sup |x| = {:.4e}, |x(T)| = {:.4e}{}",
        cfg.simulation.x0,
        order.t0,
        cfg.simulation.horizon,
        steps,
        tr.norms()[0],
        tr.sup_norm,
        tr.final_norm(),
        if tr.diverged_at.is_some() { " (diverged)" } else { "" }
    );
    let cert = match radius {
        Some(r) => {
            let opts = CertifyOptions { seed, ..Default::default() };
            let c = certify(&a, cfg.nonlinearity()?, &order, r, &opts).context("certificate")?;
            println!(
                "certificate at r = {r}: C = {:.6}, lip_h = {:.4e}, q = {:.4e}, r* = {:.4e}, valid = {}",
                c.c, c.lip_h, c.q, c.r_star, c.valid
            );
            Some(c)
        }
        None => None,
    };
    let demo = DemoReport {
        closed_loop: (0..3).map(|i| (0..3).map(|j| a[(i, j)]).collect()).collect(),
        spectral: &report,
        simulation: summary,
        certificate: cert.as_ref(),
    };
    sink.write("demo_lorenz.json", &to_json(&demo)?)?;
    sink.write("trajectory.csv", &trajectory_csv(&tr)?)?;
    let decayed = tr.diverged_at.is_none() && tr.final_norm() < tr.norms()[0];
    Ok(if report.verdict == Verdict::Stable && decayed && cert.is_none_or(|c| c.valid) {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.4}", z.re)
    } else {
        format!("{:.4}{:+.4}i", z.re, z.im)
    }
}
