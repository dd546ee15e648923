//! Random instances and solver-versus-oracle campaigns.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate_dopo, integrate_gradient_cim, integrate_kpo, plan_solve, solve_planned, KpoParams, Schedule,
    SolveConfig, State,
};
use crate::error::{Error, Result};
use crate::ising::{brute_force_with_cap, energy, sign_vector, IsingProblem, SpinConfig, DEFAULT_ORACLE_CAP};
use crate::potential::{calibrate_alpha, heuristic_alpha};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    /// Couplings uniform on `[-1, 1]`.
    UniformPM1,
    Gaussian,
    /// Couplings `+1` or `-1` with equal probability.
    SpinGlassPM1,
}

impl std::str::FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "uniformpm1" => Ok(Self::UniformPM1),
            "gaussian" => Ok(Self::Gaussian),
            "pm1" | "spinglass" | "spinglasspm1" => Ok(Self::SpinGlassPM1),
            other => Err(Error::InvalidParameter(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub distribution: Distribution,
    pub density: f64,
    pub seed: u64,
}

/// Draws the strictly upper couplings in row-major order and mirrors them.
pub fn random_instance(spec: &InstanceSpec) -> Result<IsingProblem> {
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density must lie in (0, 1], got {}", spec.density)));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let keep = spec.density >= 1.0 || rng.random::<f64>() < spec.density;
            let s = match spec.distribution {
                Distribution::UniformPM1 => rng.random_range(-1.0..=1.0),
                Distribution::Gaussian => rng.sample(StandardNormal),
                Distribution::SpinGlassPM1 => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            if keep {
                edges.push((i, j, s));
            }
        }
    }
    IsingProblem::from_edges(n, &edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    Sb,
    Cim,
    Dopo,
    Kpo,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sb" => Ok(Self::Sb),
            "cim" => Ok(Self::Cim),
            "dopo" => Ok(Self::Dopo),
            "kpo" => Ok(Self::Kpo),
            other => Err(Error::InvalidParameter(format!("unknown solver '{other}'"))),
        }
    }
}

/// How the pump threshold is chosen for each instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaPolicy {
    /// Full landscape calibration (enumerates `3^n` seeds).
    Calibrated,
    /// `sqrt(beta + 2 (1 + rho(S)))` without verification.
    Heuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub solver: SolverKind,
    pub solve: SolveConfig,
    pub alpha_policy: AlphaPolicy,
    pub master_seed: u64,
    /// Wall time is measured only on request so that results stay reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Sb,
            solve: SolveConfig::default(),
            alpha_policy: AlphaPolicy::Calibrated,
            master_seed: 0,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_seed: u64,
    pub run: usize,
    pub run_seed: u64,
    pub oracle_min: f64,
    pub solver_energy: f64,
    pub success: bool,
    pub wall_time_s: Option<f64>,
    pub captured: bool,
    pub capture_time: Option<f64>,
    pub spins: SpinConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl Percentiles {
    /// Nearest-rank percentiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let rank = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Self { p10: rank(0.1), p50: rank(0.5), p90: rank(0.9), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub solver: SolverKind,
    pub runs: Vec<RunRecord>,
    pub success_rate: f64,
    pub capture_rate: f64,
    pub capture_time: Option<Percentiles>,
    pub energy_gap: Option<Percentiles>,
    pub wall_time_s: Option<Percentiles>,
}

/// Per-run seed derived from the master seed and the run's position.
pub fn run_seed(master: u64, instance_index: usize, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((instance_index as u64) << 32) | run as u64);
    rng.next_u64()
}

struct Prepared {
    problem: IsingProblem,
    oracle_min: f64,
    alpha_star: f64,
}

/// Solves every instance `runs_per_instance` times and compares against the oracle.
pub fn run_campaign(specs: &[InstanceSpec], config: &CampaignConfig, runs_per_instance: usize) -> Result<BenchResult> {
    if let Some(s) = specs.iter().find(|s| s.n > DEFAULT_ORACLE_CAP) {
        return Err(Error::CapExceeded { what: "oracle", n: s.n, cap: DEFAULT_ORACLE_CAP });
    }
    let beta = config.solve.beta;
    let prepared: Vec<Prepared> = specs
        .par_iter()
        .map(|spec| {
            let problem = random_instance(spec)?;
            let oracle_min = brute_force_with_cap(&problem, DEFAULT_ORACLE_CAP)?.min_energy;
            let alpha_star = match config.alpha_policy {
                AlphaPolicy::Calibrated => calibrate_alpha(&problem, beta)?.alpha,
                AlphaPolicy::Heuristic => heuristic_alpha(&problem, beta),
                AlphaPolicy::Fixed(a) => a,
            };
            Ok(Prepared { problem, oracle_min, alpha_star })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..specs.len()).flat_map(|i| (0..runs_per_instance).map(move |r| (i, r))).collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let prep = &prepared[i];
            let seed = run_seed(config.master_seed, i, r);
            let started = Instant::now();
            let (spins, captured, capture_time) = run_solver(&prep.problem, prep.alpha_star, config, seed)?;
            let wall = config.record_wall_time.then(|| started.elapsed().as_secs_f64());
            let solver_energy = energy(&prep.problem, &spins)?;
            Ok(RunRecord {
                instance_seed: specs[i].seed,
                run: r,
                run_seed: seed,
                oracle_min: prep.oracle_min,
                solver_energy,
                success: solver_energy == prep.oracle_min,
                wall_time_s: wall,
                captured,
                capture_time,
                spins,
            })
        })
        .collect::<Result<_>>()?;

    let total = runs.len().max(1) as f64;
    let success_rate = runs.iter().filter(|r| r.success).count() as f64 / total;
    let capture_rate = runs.iter().filter(|r| r.captured).count() as f64 / total;
    let capture_times: Vec<f64> = runs.iter().filter_map(|r| r.capture_time).collect();
    let gaps: Vec<f64> = runs.iter().map(|r| r.solver_energy - r.oracle_min).collect();
    let walls: Vec<f64> = runs.iter().filter_map(|r| r.wall_time_s).collect();
    Ok(BenchResult {
        solver: config.solver,
        success_rate,
        capture_rate,
        capture_time: Percentiles::of(&capture_times),
        energy_gap: Percentiles::of(&gaps),
        wall_time_s: Percentiles::of(&walls),
        runs,
    })
}

fn small_init(n: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amplitude..=amplitude)).collect()
}

/// Readout of a run: spins (zeros broken towards +1), capture flag and capture time.
fn run_solver(
    problem: &IsingProblem,
    alpha_star: f64,
    config: &CampaignConfig,
    seed: u64,
) -> Result<(SpinConfig, bool, Option<f64>)> {
    let n = problem.n();
    let sc = &config.solve;
    let readout = |x: &[f64]| {
        let s = sign_vector(x);
        SpinConfig::new(s.signs().iter().map(|&v| if v == 0 { 1 } else { v }).collect())
    };
    match config.solver {
        SolverKind::Sb => {
            let cfg = SolveConfig { seed, alpha_star: Some(alpha_star), ..sc.clone() };
            let plan = plan_solve(problem, &cfg)?;
            let out = solve_planned(problem, &cfg, &plan)?;
            Ok((out.spins, out.captured, out.capture_time))
        }
        SolverKind::Cim => {
            // U_c with eps = 1/2 is U with beta = 1 and coupling S.
            let p = alpha_star * alpha_star * 4.0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = small_init(n, sc.init_amplitude, &mut rng);
            let dt = 0.1 / (1.0 + p);
            let traj = integrate_gradient_cim(problem, p, 0.5, &x0, dt, sc.ramp_time, 1000)?;
            Ok((readout(&traj.last().expect("sample").x)?, false, None))
        }
        SolverKind::Dopo => {
            let p = (alpha_star * alpha_star * 4.0).max(problem.largest_eigenvalue() + 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c0 = small_init(n, sc.init_amplitude, &mut rng);
            let s0 = small_init(n, sc.init_amplitude, &mut rng);
            let dt = 0.1 / (1.0 + p);
            let traj = integrate_dopo(problem, p, &c0, &s0, dt, sc.ramp_time, 1000)?;
            Ok((readout(&traj.last().expect("sample").x)?, false, None))
        }
        SolverKind::Kpo => {
            let kp = KpoParams::default();
            let p_inf = 4.0 * alpha_star * alpha_star;
            let sch = Schedule::linear_saturating(0.0, p_inf, sc.ramp_time)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = small_init(n, sc.init_amplitude, &mut rng);
            let dt = 0.05 / (1.0 + p_inf);
            let traj = integrate_kpo(problem, kp, &sch, &State::at_rest(x0), dt, sc.ramp_time, 1000)?;
            Ok((readout(&traj.last().expect("sample").x)?, false, None))
        }
    }
}
