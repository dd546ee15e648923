//! `isingflow` command-line front end.
//!
//! Exit codes: 0 success or captured, 2 usage or input error, 3 solver finished
//! uncaptured, 4 numeric blow-up, 1 anything else.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use config::{pick, FileConfig, UsageError};
use isingflow::dynamics::{plan_solve, solve_planned, State};
use isingflow::harness::CampaignConfig;
use isingflow::io::{self, Grid2};
use isingflow::{
    brute_force, find_critical_points, neck_linearize, periodic_orbit_ellipse, r2_closed_form, run_campaign,
    AlphaPolicy, Distribution, Error, InstanceSpec, Integrator, IsingProblem, PotentialParams, ScheduleKind,
    SolveConfig, SolverKind,
};

#[derive(Parser, Debug)]
#[command(name = "isingflow", version, about = "Ising minimization via quartic-potential landscapes and SB dynamics")]
struct Cli {
    /// TOML file with defaults for shared flags (beta, seed, dt, ...). CLI flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run ramped SB with the capture stopping rule and print the spins.
    Solve(SolveArgs),
    /// Enumerate and classify the critical points of U.
    Landscape(LandscapeArgs),
    /// Run SB over the full horizon and write the trace CSV.
    Trace(TraceArgs),
    /// Replay a trace CSV through the capture test.
    Capture(CaptureArgs),
    /// Linearize the two-spin SB flow at the saddle (lambda3, -lambda4).
    Neck(NeckArgs),
    /// Closed-form two-spin critical points for the canonical coupling.
    Bifurcate(BifurcateArgs),
    /// Solver-versus-oracle campaign on random instances.
    Bench(BenchArgs),
    /// Exhaustive ground states.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScheduleArg {
    Linear,
    Tanh,
    Constant,
}

impl ScheduleArg {
    fn kind(self) -> ScheduleKind {
        match self {
            ScheduleArg::Linear => ScheduleKind::LinearSaturating,
            ScheduleArg::Tanh => ScheduleKind::TanhSaturating,
            ScheduleArg::Constant => ScheduleKind::Constant,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum IntegratorArg {
    Euler,
    Leapfrog,
    Rk4,
    DiscreteGradient,
}

impl IntegratorArg {
    fn integrator(self) -> Integrator {
        match self {
            IntegratorArg::Euler => Integrator::SymplecticEuler,
            IntegratorArg::Leapfrog => Integrator::Leapfrog,
            IntegratorArg::Rk4 => Integrator::RK4,
            IntegratorArg::DiscreteGradient => Integrator::DiscreteGradient,
        }
    }
}

/// SB run parameters shared by solve, trace and capture.
#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Problem JSON (dense or sparse).
    #[arg(long)]
    problem: PathBuf,
    /// Detuning beta [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Calibrated threshold [default: calibrated for n <= 16, heuristic above].
    #[arg(long)]
    alpha_star: Option<f64>,
    /// Final pump [default: 8.5 * alpha_star].
    #[arg(long)]
    alpha_inf: Option<f64>,
    /// Pump schedule [default: linear].
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    /// Ramp duration [default: 50].
    #[arg(long)]
    ramp_time: Option<f64>,
    /// Step size [default: min(1e-2, 0.1 / (sqrt(2) alpha_inf))].
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon [default: 2 * ramp_time].
    #[arg(long)]
    t_max: Option<f64>,
    /// Seed of the initial condition [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Initial positions are uniform in [-a, a] [default: 0.1].
    #[arg(long)]
    init_amplitude: Option<f64>,
    /// Record every k-th step [default: 100].
    #[arg(long)]
    record_stride: Option<usize>,
    /// Run the capture test every k-th step [default: 10].
    #[arg(long)]
    capture_check_stride: Option<usize>,
    /// Integrator [default: euler].
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
}

fn parse_schedule(s: &str) -> anyhow::Result<ScheduleKind> {
    Ok(ScheduleArg::from_str(s, true).map_err(|e| UsageError(format!("schedule: {e}")))?.kind())
}

fn parse_integrator(s: &str) -> anyhow::Result<Integrator> {
    Ok(IntegratorArg::from_str(s, true).map_err(|e| UsageError(format!("integrator: {e}")))?.integrator())
}

impl RunArgs {
    fn solve_config(&self, file: &FileConfig) -> anyhow::Result<SolveConfig> {
        let d = SolveConfig::default();
        let schedule_kind = match (self.schedule, file.schedule.as_deref()) {
            (Some(s), _) => s.kind(),
            (None, Some(s)) => parse_schedule(s)?,
            (None, None) => d.schedule_kind,
        };
        let integrator = match (self.integrator, file.integrator.as_deref()) {
            (Some(i), _) => i.integrator(),
            (None, Some(s)) => parse_integrator(s)?,
            (None, None) => d.integrator,
        };
        Ok(SolveConfig {
            beta: pick(self.beta, file.beta, d.beta),
            alpha_star: self.alpha_star.or(file.alpha_star),
            alpha_inf: self.alpha_inf.or(file.alpha_inf),
            schedule_kind,
            ramp_time: pick(self.ramp_time, file.ramp_time, d.ramp_time),
            dt: self.dt.or(file.dt),
            t_max: self.t_max.or(file.t_max),
            seed: pick(self.seed, file.seed, d.seed),
            init_amplitude: pick(self.init_amplitude, file.init_amplitude, d.init_amplitude),
            record_stride: pick(self.record_stride, file.record_stride, d.record_stride),
            capture_check_stride: pick(self.capture_check_stride, file.capture_check_stride, d.capture_check_stride),
            integrator,
            stop_on_capture: d.stop_on_capture,
            b5_enumeration_cap: file.b5_enumeration_cap.unwrap_or(d.b5_enumeration_cap),
            max_retries: file.max_retries.unwrap_or(d.max_retries),
        })
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Print a JSON summary instead of the bare spin list.
    #[arg(long)]
    json: bool,
    /// Also write the recorded trajectory as trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop at the first capture instead of running to t_max.
    #[arg(long)]
    stop_on_capture: bool,
}

#[derive(Args, Debug)]
struct CaptureArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Trace CSV to replay.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Detuning beta [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Pump alpha [default: calibrated].
    #[arg(long)]
    alpha: Option<f64>,
    /// Critical points as x1..xn,U,index,class.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// n = 2 only: x1,x2,U on a square grid.
    #[arg(long)]
    grid_csv: Option<PathBuf>,
    /// Grid nodes per side [default: 101].
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    /// n = 2 only: critical-point overlay with class labels (same rows as --csv).
    #[arg(long)]
    overlay_csv: Option<PathBuf>,
    /// n = 2 only: Hill region level c for --hill-csv.
    #[arg(long, requires = "hill_csv", allow_negative_numbers = true)]
    hill_level: Option<f64>,
    /// n = 2 only: x1,x2,inside mask of {U < c}.
    #[arg(long, requires = "hill_level")]
    hill_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NeckArgs {
    /// Detuning beta [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Pump alpha; needs alpha^2 - beta > 2.
    #[arg(long)]
    alpha: Option<f64>,
    /// Amplitude |eta| of the periodic-orbit prediction [default: 1e-4].
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
}

#[derive(Args, Debug)]
struct BifurcateArgs {
    /// Detuning beta [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
    Pm1,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SolverArg {
    Sb,
    Cim,
    Dopo,
    Kpo,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PolicyArg {
    Calibrated,
    Heuristic,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of instances.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_enum, default_value_t = DistArg::Pm1)]
    dist: DistArg,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per instance.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Sb)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Heuristic)]
    alpha_policy: PolicyArg,
    /// Use this alpha_star for every instance; overrides --alpha-policy.
    #[arg(long)]
    alpha_star: Option<f64>,
    /// Detuning beta [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Per-run CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall time (makes output non-reproducible).
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    problem: PathBuf,
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // Built without reading the environment so runs do not depend on it.
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::BlowUp { .. }) => 4,
        Some(
            Error::Parse(_)
            | Error::InvalidParameter(_)
            | Error::InvalidProblem(_)
            | Error::DimensionMismatch { .. }
            | Error::CapExceeded { .. }
            | Error::Io(_),
        ) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, &file),
        Command::Trace(a) => cmd_trace(&a, &file),
        Command::Capture(a) => cmd_capture(&a, &file),
        Command::Landscape(a) => cmd_landscape(&a, &file),
        Command::Neck(a) => cmd_neck(&a, &file),
        Command::Bifurcate(a) => cmd_bifurcate(&a, &file),
        Command::Bench(a) => cmd_bench(&a, &file),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

fn load(path: &Path) -> anyhow::Result<IsingProblem> {
    io::load_problem(path).with_context(|| format!("loading {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(Error::from).with_context(|| format!("writing {}", path.display()))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    spins: &'a isingflow::SpinConfig,
    energy: f64,
    captured: bool,
    capture_time: Option<f64>,
    alpha_star: f64,
    alpha_inf: f64,
    dt: f64,
    attempts: usize,
    capture: &'a Option<isingflow::CaptureReport>,
}

fn cmd_solve(a: &SolveArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let problem = load(&a.run.problem)?;
    let cfg = a.run.solve_config(file)?;
    let plan = plan_solve(&problem, &cfg)?;
    info!("alpha_star = {}, alpha_inf = {}, dt = {}", plan.alpha_star, plan.schedule.alpha_inf, plan.dt);
    if plan.context.assumption_violated {
        warn!("alpha_inf does not satisfy the capture theorem's assumption; capture may be premature");
    }
    let out = solve_planned(&problem, &cfg, &plan)?;
    if let Some(path) = &a.trace {
        write_out(path, &io::trace_csv(problem.n(), &out.trajectory.samples)?)?;
    }
    if a.json {
        print_json(&SolveSummary {
            spins: &out.spins,
            energy: isingflow::energy(&problem, &out.spins)?,
            captured: out.captured,
            capture_time: out.capture_time,
            alpha_star: out.alpha_star,
            alpha_inf: out.alpha_inf,
            dt: out.dt,
            attempts: out.attempts,
            capture: &out.capture,
        })?;
    } else {
        emit(&format!("{}\n", out.spins))?;
    }
    Ok(if out.captured { 0 } else { 3 })
}

fn cmd_trace(a: &TraceArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let problem = load(&a.run.problem)?;
    let cfg = SolveConfig { stop_on_capture: a.stop_on_capture, ..a.run.solve_config(file)? };
    let plan = plan_solve(&problem, &cfg)?;
    let out = solve_planned(&problem, &cfg, &plan)?;
    let csv = io::trace_csv(problem.n(), &out.trajectory.samples)?;
    match &a.out {
        Some(path) => write_out(path, &csv)?,
        None => emit(&csv)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct CaptureRow {
    t: f64,
    in_capture: u8,
    premature: u8,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "U_R0")]
    u_r0: f64,
    #[serde(rename = "U_B")]
    u_b: f64,
    #[serde(rename = "U_sd")]
    u_sd: Option<f64>,
    norm_sq: f64,
    signs: String,
}

fn cmd_capture(a: &CaptureArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let problem = load(&a.run.problem)?;
    let cfg = a.run.solve_config(file)?;
    let plan = plan_solve(&problem, &cfg)?;
    let text = std::fs::read_to_string(&a.trace).map_err(Error::from).with_context(|| a.trace.display().to_string())?;
    let (n, samples) = io::parse_trace_csv(&text)?;
    if n != problem.n() {
        return Err(Error::DimensionMismatch { expected: problem.n(), got: n }.into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut any = false;
    for s in samples {
        if s.y.is_empty() {
            bail!(UsageError("trace has no momenta; capture needs an SB trace".into()));
        }
        let report = plan.context.check(&State::new(s.x, s.y, s.t)?);
        any |= report.in_capture;
        let signs: Vec<String> = report.signs.signs().iter().map(i8::to_string).collect();
        w.serialize(CaptureRow {
            t: report.t,
            in_capture: report.in_capture.into(),
            premature: report.premature.into(),
            h: report.h,
            u_r0: report.u_r0,
            u_b: report.u_b,
            u_sd: report.u_sd,
            norm_sq: report.norm_sq,
            signs: signs.join(" "),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(&String::from_utf8(bytes)?)?;
    Ok(if any { 0 } else { 3 })
}

fn cmd_landscape(a: &LandscapeArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let problem = load(&a.problem)?;
    let beta = pick(a.beta, file.beta, 1.0);
    let alpha = match a.alpha.or(file.alpha) {
        Some(al) => al,
        None => isingflow::calibrate_alpha(&problem, beta)?.alpha,
    };
    let n = problem.n();
    let params = PotentialParams::new(problem, alpha, beta)?;
    let summary = find_critical_points(&params)?;
    if let Some(p) = &a.csv {
        write_out(p, &io::overlay_csv(&summary.critical_points)?)?;
    }
    let wants_plane = a.grid_csv.is_some() || a.overlay_csv.is_some() || a.hill_csv.is_some();
    if wants_plane && n != 2 {
        bail!(UsageError(format!("--grid-csv, --overlay-csv and --hill-csv need n = 2, got n = {n}")));
    }
    let grid = Grid2::around(&summary, a.grid_points)?;
    if let Some(p) = &a.grid_csv {
        write_out(p, &io::grid_csv(&params, grid)?)?;
    }
    if let Some(p) = &a.overlay_csv {
        write_out(p, &io::overlay_csv(&summary.critical_points)?)?;
    }
    if let (Some(level), Some(p)) = (a.hill_level, &a.hill_csv) {
        write_out(p, &io::hill_mask_csv(&params, level, grid)?)?;
    }
    print_json(&summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct NeckReport {
    analysis: isingflow::NeckAnalysis,
    eigenvalues: [(f64, f64); 4],
    eigen_residual: f64,
    periodic_orbit: isingflow::Ellipse,
}

fn cmd_neck(a: &NeckArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let beta = pick(a.beta, file.beta, 1.0);
    let Some(alpha) = a.alpha.or(file.alpha) else {
        bail!(UsageError("--alpha is required".into()));
    };
    let analysis = neck_linearize(beta, alpha)?;
    let periodic_orbit = periodic_orbit_ellipse(&analysis, a.eta)?;
    print_json(&NeckReport {
        eigenvalues: analysis.eigenvalues(),
        eigen_residual: analysis.eigen_residual(),
        periodic_orbit,
        analysis,
    })?;
    Ok(0)
}

fn cmd_bifurcate(a: &BifurcateArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let beta = pick(a.beta, file.beta, 1.0);
    let Some(alpha) = a.alpha.or(file.alpha) else {
        bail!(UsageError("--alpha is required".into()));
    };
    print_json(&r2_closed_form(alpha, beta)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct BenchRow {
    instance_seed: u64,
    run: usize,
    run_seed: u64,
    oracle_min: f64,
    solver_energy: f64,
    success: u8,
    captured: u8,
    capture_time: Option<f64>,
    wall_time_s: Option<f64>,
}

fn cmd_bench(a: &BenchArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let seed = pick(a.seed, file.seed, 0);
    let distribution = match a.dist {
        DistArg::Uniform => Distribution::UniformPM1,
        DistArg::Gaussian => Distribution::Gaussian,
        DistArg::Pm1 => Distribution::SpinGlassPM1,
    };
    let solver = match a.solver {
        SolverArg::Sb => SolverKind::Sb,
        SolverArg::Cim => SolverKind::Cim,
        SolverArg::Dopo => SolverKind::Dopo,
        SolverArg::Kpo => SolverKind::Kpo,
    };
    let alpha_policy = match (a.alpha_star, a.alpha_policy) {
        (Some(x), _) => AlphaPolicy::Fixed(x),
        (None, PolicyArg::Calibrated) => AlphaPolicy::Calibrated,
        (None, PolicyArg::Heuristic) => AlphaPolicy::Heuristic,
    };
    // Instance seeds are consecutive from the master seed.
    let specs: Vec<InstanceSpec> = (0..a.count as u64)
        .map(|k| InstanceSpec { n: a.n, distribution, density: a.density, seed: seed.wrapping_add(k) })
        .collect();
    let solve = SolveConfig { beta: pick(a.beta, file.beta, 1.0), ..SolveConfig::default() };
    let cfg = CampaignConfig { solver, solve, alpha_policy, master_seed: seed, record_wall_time: a.wall_time };
    let result = run_campaign(&specs, &cfg, a.runs)?;
    if let Some(p) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &result.runs {
            w.serialize(BenchRow {
                instance_seed: r.instance_seed,
                run: r.run,
                run_seed: r.run_seed,
                oracle_min: r.oracle_min,
                solver_energy: r.solver_energy,
                success: r.success.into(),
                captured: r.captured.into(),
                capture_time: r.capture_time,
                wall_time_s: r.wall_time_s,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        write_out(p, &String::from_utf8(bytes)?)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        solver: SolverKind,
        instances: usize,
        runs: usize,
        success_rate: f64,
        capture_rate: f64,
        capture_time: &'a Option<isingflow::harness::Percentiles>,
        energy_gap: &'a Option<isingflow::harness::Percentiles>,
        wall_time_s: &'a Option<isingflow::harness::Percentiles>,
    }
    print_json(&Summary {
        solver: result.solver,
        instances: specs.len(),
        runs: result.runs.len(),
        success_rate: result.success_rate,
        capture_rate: result.capture_rate,
        capture_time: &result.capture_time,
        energy_gap: &result.energy_gap,
        wall_time_s: &result.wall_time_s,
    })?;
    Ok(0)
}

fn cmd_oracle(a: &OracleArgs) -> anyhow::Result<u8> {
    let problem = load(&a.problem)?;
    print_json(&brute_force(&problem)?)?;
    Ok(0)
}
