//! Continuous-time solvers: the SB Hamiltonian system
//! `x' = y, y' = -grad U(x, t)`, the KPO network, and the gradient-flow CIM/DOPO models.
//!
//! SB runs in rescaled units. A physical SB system with constants `K, Delta, xi0`,
//! couplings `J` and pump `p(t)` maps onto this one through
//! `beta = Delta / xi0`, `alpha^2 = p / xi0`, `S = J`, `x = sqrt(xi0 / K) X`
//! and `tau = sqrt(Delta xi0) t`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capture::{CaptureContext, CaptureReport};
use crate::error::{Error, Result};
use crate::ising::{sign_vector, IsingProblem, SpinConfig};
use crate::potential::{self, calibrate_alpha, grad_into, heuristic_alpha, value_unchecked, DEFAULT_SEED_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleKind {
    Constant,
    /// Quadratic ease-out reaching `alpha_inf` exactly at `ramp_time`; `C^1` at the corner.
    LinearSaturating,
    TanhSaturating,
}

/// Monotone, saturating pump `alpha(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub alpha_start: f64,
    pub alpha_inf: f64,
    pub ramp_time: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, alpha_start: f64, alpha_inf: f64, ramp_time: f64) -> Result<Self> {
        if !(alpha_inf.is_finite() && alpha_inf > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha_inf must be positive, got {alpha_inf}")));
        }
        if kind != ScheduleKind::Constant {
            if !(alpha_start.is_finite() && (0.0..=alpha_inf).contains(&alpha_start)) {
                return Err(Error::InvalidParameter(format!(
                    "alpha_start must lie in [0, alpha_inf], got {alpha_start}"
                )));
            }
            if !(ramp_time.is_finite() && ramp_time > 0.0) {
                return Err(Error::InvalidParameter(format!("ramp_time must be positive, got {ramp_time}")));
            }
        }
        let alpha_start = if kind == ScheduleKind::Constant { alpha_inf } else { alpha_start };
        Ok(Self { kind, alpha_start, alpha_inf, ramp_time })
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant, alpha, alpha, 1.0)
    }

    pub fn linear_saturating(alpha_start: f64, alpha_inf: f64, ramp_time: f64) -> Result<Self> {
        Self::new(ScheduleKind::LinearSaturating, alpha_start, alpha_inf, ramp_time)
    }

    pub fn tanh_saturating(alpha_start: f64, alpha_inf: f64, ramp_time: f64) -> Result<Self> {
        Self::new(ScheduleKind::TanhSaturating, alpha_start, alpha_inf, ramp_time)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        let span = self.alpha_inf - self.alpha_start;
        match self.kind {
            ScheduleKind::Constant => self.alpha_inf,
            ScheduleKind::LinearSaturating => {
                let tau = (t / self.ramp_time).clamp(0.0, 1.0);
                let rest = 1.0 - tau;
                self.alpha_start + span * (1.0 - rest * rest)
            }
            ScheduleKind::TanhSaturating => self.alpha_start + span * (t.max(0.0) / self.ramp_time).tanh(),
        }
    }

    pub fn alpha_dot(&self, t: f64) -> f64 {
        let span = self.alpha_inf - self.alpha_start;
        match self.kind {
            ScheduleKind::Constant => 0.0,
            ScheduleKind::LinearSaturating => {
                if t >= self.ramp_time {
                    0.0
                } else {
                    2.0 * span * (1.0 - t.max(0.0) / self.ramp_time) / self.ramp_time
                }
            }
            ScheduleKind::TanhSaturating => {
                let th = (t.max(0.0) / self.ramp_time).tanh();
                span * (1.0 - th * th) / self.ramp_time
            }
        }
    }

    /// First time at which `alpha(t) >= target`, if ever reached.
    pub fn time_reaching(&self, target: f64) -> Option<f64> {
        let span = self.alpha_inf - self.alpha_start;
        if target <= self.alpha_start {
            return Some(0.0);
        }
        if target > self.alpha_inf || span <= 0.0 {
            return None;
        }
        let frac = (target - self.alpha_start) / span;
        match self.kind {
            ScheduleKind::Constant => Some(0.0),
            ScheduleKind::LinearSaturating => Some(self.ramp_time * (1.0 - (1.0 - frac).sqrt())),
            ScheduleKind::TanhSaturating => (frac < 1.0).then(|| self.ramp_time * frac.atanh()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: Vec<f64>,
    /// Momenta; empty for first-order flows.
    pub y: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if !y.is_empty() && y.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) || !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter("initial state must be finite with t >= 0".into()));
        }
        Ok(Self { x, y, t })
    }

    pub fn at_rest(x: Vec<f64>) -> Self {
        let n = x.len();
        Self { x, y: vec![0.0; n], t: 0.0 }
    }

    /// Same position, reversed momentum: the time-reversed start.
    pub fn negated_momentum(&self) -> Self {
        Self { x: self.x.clone(), y: self.y.iter().map(|v| -v).collect(), t: self.t }
    }

    pub fn negated(&self) -> Self {
        Self { x: self.x.iter().map(|v| -v).collect(), y: self.y.iter().map(|v| -v).collect(), t: self.t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    /// Kick with the force at the current position and time, then drift.
    SymplecticEuler,
    /// Velocity Verlet; time-reversible at constant alpha.
    Leapfrog,
    RK4,
    /// Exact pump jump followed by an average-vector-field step. Conserves `H` exactly at
    /// constant alpha and makes each ramp step decrease `H` by exactly `d(alpha^2)/2 |x|^2`.
    DiscreteGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub alpha: f64,
    /// Hamiltonian for Hamiltonian systems, potential for gradient flows.
    pub h: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub in_capture: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub dt: f64,
    pub integrator: Integrator,
    pub record_stride: usize,
    pub seed: u64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn final_state(&self) -> Option<State> {
        self.last().map(|s| State { x: s.x.clone(), y: s.y.clone(), t: s.t })
    }
}

/// `H = |y|^2 / 2 + U(x)` with alpha frozen at the given value.
pub fn hamiltonian_sb(problem: &IsingProblem, beta: f64, alpha: f64, state: &State) -> Result<f64> {
    let n = problem.n();
    if state.x.len() != n || state.y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: state.x.len().min(state.y.len()) });
    }
    Ok(sb_energy(problem, beta - alpha * alpha, &state.x, &state.y))
}

fn sb_energy(problem: &IsingProblem, shift: f64, x: &[f64], y: &[f64]) -> f64 {
    0.5 * y.iter().map(|v| v * v).sum::<f64>() + value_unchecked(problem, shift, x)
}

fn check_blowup(x: &[f64], y: &[f64], bound: f64, t: f64) -> Result<()> {
    let bad = x.iter().any(|v| !v.is_finite() || v.abs() > bound) || y.iter().any(|v| !v.is_finite());
    if bad {
        Err(Error::BlowUp { t })
    } else {
        Ok(())
    }
}

fn step_count(dt: f64, t_max: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be non-negative, got {t_max}")));
    }
    Ok((t_max / dt - 1e-9).ceil().max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbOptions {
    pub integrator: Integrator,
    pub record_stride: usize,
    /// Blow-up is declared when `|x|_inf` exceeds this multiple of `alpha_inf`.
    pub blowup_factor: f64,
}

impl Default for SbOptions {
    fn default() -> Self {
        Self { integrator: Integrator::SymplecticEuler, record_stride: 1, blowup_factor: 10.0 }
    }
}

/// One SB integrator bound to an instance and schedule.
pub struct SbStepper<'a> {
    problem: &'a IsingProblem,
    beta: f64,
    schedule: &'a Schedule,
    integrator: Integrator,
    g: Vec<f64>,
    buf: [Vec<f64>; 6],
}

impl<'a> SbStepper<'a> {
    pub fn new(problem: &'a IsingProblem, beta: f64, schedule: &'a Schedule, integrator: Integrator) -> Self {
        let n = problem.n();
        Self {
            problem,
            beta,
            schedule,
            integrator,
            g: vec![0.0; n],
            buf: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    fn shift_at(&self, t: f64) -> f64 {
        let a = self.schedule.alpha(t);
        self.beta - a * a
    }

    pub fn energy(&self, state: &State) -> f64 {
        sb_energy(self.problem, self.shift_at(state.t), &state.x, &state.y)
    }

    /// Advances `state` from `t` to `t_next`.
    pub fn step(&mut self, state: &mut State, t_next: f64) {
        let dt = t_next - state.t;
        let n = state.x.len();
        match self.integrator {
            Integrator::SymplecticEuler => {
                let shift = self.shift_at(state.t);
                grad_into(self.problem, shift, &state.x, &mut self.g);
                for i in 0..n {
                    state.y[i] -= dt * self.g[i];
                    state.x[i] += dt * state.y[i];
                }
            }
            Integrator::Leapfrog => {
                let shift = self.shift_at(state.t);
                grad_into(self.problem, shift, &state.x, &mut self.g);
                for i in 0..n {
                    state.y[i] -= 0.5 * dt * self.g[i];
                    state.x[i] += dt * state.y[i];
                }
                let shift = self.shift_at(t_next);
                grad_into(self.problem, shift, &state.x, &mut self.g);
                for i in 0..n {
                    state.y[i] -= 0.5 * dt * self.g[i];
                }
            }
            Integrator::RK4 => self.rk4(state, dt),
            Integrator::DiscreteGradient => self.avf(state, self.shift_at(t_next), dt),
        }
        state.t = t_next;
    }

    fn rk4(&mut self, state: &mut State, dt: f64) {
        let n = state.x.len();
        let t = state.t;
        let [kx, ky, acc_x, acc_y, tx, ty] = &mut self.buf;
        acc_x.copy_from_slice(&state.x);
        acc_y.copy_from_slice(&state.y);
        tx.copy_from_slice(&state.x);
        ty.copy_from_slice(&state.y);
        let stages = [(0.0, 1.0 / 6.0), (0.5, 1.0 / 3.0), (0.5, 1.0 / 3.0), (1.0, 1.0 / 6.0)];
        for (s, &(c, w)) in stages.iter().enumerate() {
            let shift = {
                let a = self.schedule.alpha(t + c * dt);
                self.beta - a * a
            };
            grad_into(self.problem, shift, tx, &mut self.g);
            for i in 0..n {
                kx[i] = ty[i];
                ky[i] = -self.g[i];
                acc_x[i] += w * dt * kx[i];
                acc_y[i] += w * dt * ky[i];
            }
            if s < 3 {
                let next_c = stages[s + 1].0;
                for i in 0..n {
                    tx[i] = state.x[i] + next_c * dt * kx[i];
                    ty[i] = state.y[i] + next_c * dt * ky[i];
                }
            }
        }
        state.x.copy_from_slice(acc_x);
        state.y.copy_from_slice(acc_y);
    }

    /// Average-vector-field step at fixed `shift`; the segment average of the cubic
    /// gradient is exact by Simpson's rule.
    fn avf(&mut self, state: &mut State, shift: f64, dt: f64) {
        let n = state.x.len();
        let [xn, yn, mid, gavg, g1, _] = &mut self.buf;
        grad_into(self.problem, shift, &state.x, &mut self.g);
        for i in 0..n {
            yn[i] = state.y[i] - dt * self.g[i];
            xn[i] = state.x[i] + dt * 0.5 * (state.y[i] + yn[i]);
        }
        let scale = 1.0 + state.x.iter().chain(&state.y).fold(0.0_f64, |m, v| m.max(v.abs()));
        for _ in 0..100 {
            for i in 0..n {
                mid[i] = 0.5 * (state.x[i] + xn[i]);
            }
            grad_into(self.problem, shift, mid, gavg);
            grad_into(self.problem, shift, xn, g1);
            let mut change = 0.0_f64;
            for i in 0..n {
                let avg = (self.g[i] + 4.0 * gavg[i] + g1[i]) / 6.0;
                let y_new = state.y[i] - dt * avg;
                change = change.max((y_new - yn[i]).abs());
                yn[i] = y_new;
            }
            for i in 0..n {
                let x_new = state.x[i] + dt * 0.5 * (state.y[i] + yn[i]);
                change = change.max((x_new - xn[i]).abs());
                xn[i] = x_new;
            }
            if change <= 1e-15 * scale {
                break;
            }
        }
        state.x.copy_from_slice(xn);
        state.y.copy_from_slice(yn);
    }
}

fn sb_sample(problem: &IsingProblem, beta: f64, schedule: &Schedule, state: &State) -> TrajectorySample {
    let alpha = schedule.alpha(state.t);
    TrajectorySample {
        t: state.t,
        alpha,
        h: sb_energy(problem, beta - alpha * alpha, &state.x, &state.y),
        x: state.x.clone(),
        y: state.y.clone(),
        in_capture: None,
    }
}

fn check_sb_inputs(problem: &IsingProblem, beta: f64, init: &State) -> Result<()> {
    let n = problem.n();
    if init.x.len() != n || init.y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if init.x.len() != n { init.x.len() } else { init.y.len() } });
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    State::new(init.x.clone(), init.y.clone(), init.t).map(|_| ())
}

/// SB integration with symplectic Euler, recording every `record_stride` steps and the final state.
pub fn integrate_sb(
    problem: &IsingProblem,
    beta: f64,
    schedule: &Schedule,
    init: &State,
    dt: f64,
    t_max: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    integrate_sb_with(problem, beta, schedule, init, dt, t_max, SbOptions { record_stride, ..SbOptions::default() })
}

pub fn integrate_sb_with(
    problem: &IsingProblem,
    beta: f64,
    schedule: &Schedule,
    init: &State,
    dt: f64,
    t_max: f64,
    opts: SbOptions,
) -> Result<Trajectory> {
    check_sb_inputs(problem, beta, init)?;
    let steps = step_count(dt, t_max)?;
    let stride = opts.record_stride.max(1);
    let bound = opts.blowup_factor * schedule.alpha_inf;
    let mut stepper = SbStepper::new(problem, beta, schedule, opts.integrator);
    let mut state = init.clone();
    let t0 = init.t;
    let mut samples = vec![sb_sample(problem, beta, schedule, &state)];
    for k in 1..=steps {
        stepper.step(&mut state, t0 + k as f64 * dt);
        check_blowup(&state.x, &state.y, bound, state.t)?;
        if k % stride == 0 || k == steps {
            samples.push(sb_sample(problem, beta, schedule, &state));
        }
    }
    Ok(Trajectory { samples, dt, integrator: opts.integrator, record_stride: stride, seed: 0 })
}

/// Classical RK4 step for an autonomous-in-structure field `f(t, z, dz)`.
fn rk4_step(z: &mut [f64], t: f64, dt: f64, f: &mut impl FnMut(f64, &[f64], &mut [f64])) {
    let m = z.len();
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    f(t, z, &mut k1);
    for i in 0..m {
        tmp[i] = z[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..m {
        tmp[i] = z[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..m {
        tmp[i] = z[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4);
    for i in 0..m {
        z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Drives an RK4 integration of a `2n`-dimensional (or `n`-dimensional) system.
#[allow(clippy::too_many_arguments)]
fn drive_rk4(
    n: usize,
    z0: Vec<f64>,
    t0: f64,
    dt: f64,
    t_max: f64,
    record_stride: usize,
    bound: f64,
    mut field: impl FnMut(f64, &[f64], &mut [f64]),
    mut sample: impl FnMut(f64, &[f64]) -> TrajectorySample,
) -> Result<Trajectory> {
    let steps = step_count(dt, t_max)?;
    let stride = record_stride.max(1);
    let mut z = z0;
    let mut samples = vec![sample(t0, &z)];
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * dt;
        rk4_step(&mut z, t, dt, &mut field);
        let t_next = t0 + k as f64 * dt;
        check_blowup(&z[..n], &z[n..], bound, t_next)?;
        if k % stride == 0 || k == steps {
            samples.push(sample(t_next, &z));
        }
    }
    Ok(Trajectory { samples, dt, integrator: Integrator::RK4, record_stride: stride, seed: 0 })
}

/// Constants of the Kerr parametric oscillator network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpoParams {
    pub k: f64,
    pub delta: f64,
    pub xi0: f64,
}

impl KpoParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("K", self.k), ("Delta", self.delta), ("xi0", self.xi0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for KpoParams {
    fn default() -> Self {
        Self { k: 1.0, delta: 1.0, xi0: 1.0 }
    }
}

/// KPO Hamiltonian `H_k(x, y)` at pump value `p`.
pub fn hamiltonian_kpo(problem: &IsingProblem, kp: &KpoParams, p: f64, x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let r = x[i] * x[i] + y[i] * y[i];
        acc += kp.k / 4.0 * r * r - p / 2.0 * (x[i] * x[i] - y[i] * y[i]) + kp.delta / 2.0 * r;
    }
    acc - kp.xi0 / 2.0 * (problem.quadratic_form(x) + problem.quadratic_form(y))
}

/// KPO network under the pump schedule `schedule_p` (its value is read as `p(t)`), RK4.
pub fn integrate_kpo(
    problem: &IsingProblem,
    kp: KpoParams,
    schedule_p: &Schedule,
    init: &State,
    dt: f64,
    t_max: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    kp.validate()?;
    let n = problem.n();
    if init.x.len() != n || init.y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.x.len() });
    }
    let scale = ((schedule_p.alpha_inf + kp.delta + kp.xi0 * problem.spectral_radius()) / kp.k).sqrt();
    let bound = 10.0 * (1.0 + scale);
    let s = problem.coupling();
    let field = |t: f64, z: &[f64], dz: &mut [f64]| {
        let p = schedule_p.alpha(t);
        let (x, y) = z.split_at(n);
        for i in 0..n {
            let r = kp.k * (x[i] * x[i] + y[i] * y[i]);
            let (mut jx, mut jy) = (0.0, 0.0);
            for j in 0..n {
                jx += s[(i, j)] * x[j];
                jy += s[(i, j)] * y[j];
            }
            dz[i] = (p + kp.delta + r) * y[i] - kp.xi0 * jy;
            dz[n + i] = (p - kp.delta - r) * x[i] + kp.xi0 * jx;
        }
    };
    let sample = |t: f64, z: &[f64]| {
        let p = schedule_p.alpha(t);
        let (x, y) = z.split_at(n);
        TrajectorySample { t, alpha: p, h: hamiltonian_kpo(problem, &kp, p, x, y), x: x.to_vec(), y: y.to_vec(), in_capture: None }
    };
    let z0 = [init.x.as_slice(), init.y.as_slice()].concat();
    drive_rk4(n, z0, init.t, dt, t_max, record_stride, bound, field, sample)
}

/// `U_c(x) = sum x^4/4 + (1 - p)/2 x^2 - eps x^T S x`.
pub fn potential_cim(problem: &IsingProblem, p: f64, eps: f64, x: &[f64]) -> f64 {
    // U_c is U with beta = 1, alpha^2 = p and coupling 2 eps S.
    let mut acc = 0.0;
    for &xi in x {
        acc += 0.25 * xi.powi(4) + 0.5 * (1.0 - p) * xi * xi;
    }
    acc - eps * problem.quadratic_form(x)
}

/// Gradient flow `x' = -grad U_c`, RK4.
pub fn integrate_gradient_cim(
    problem: &IsingProblem,
    p: f64,
    eps: f64,
    init: &[f64],
    dt: f64,
    t_max: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    let n = problem.n();
    if init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.len() });
    }
    if !(p.is_finite() && eps.is_finite()) {
        return Err(Error::InvalidParameter("p and eps must be finite".into()));
    }
    let s = problem.coupling();
    let bound = 10.0 * (1.0 + (p.abs() + 2.0 * eps.abs() * problem.spectral_radius()).sqrt());
    let field = |_t: f64, x: &[f64], dx: &mut [f64]| {
        for i in 0..n {
            let mut sx = 0.0;
            for j in 0..n {
                sx += s[(i, j)] * x[j];
            }
            dx[i] = -(x[i] * x[i] * x[i] + (1.0 - p) * x[i] - 2.0 * eps * sx);
        }
    };
    let sample = |t: f64, x: &[f64]| TrajectorySample {
        t,
        alpha: p.max(0.0).sqrt(),
        h: potential_cim(problem, p, eps, x),
        x: x.to_vec(),
        y: Vec::new(),
        in_capture: None,
    };
    drive_rk4(n, init.to_vec(), 0.0, dt, t_max, record_stride, bound, field, sample)
}

/// The two-quadrature potential `U_d(c, s)`.
pub fn potential_dopo(problem_xi: &IsingProblem, p: f64, c: &[f64], s: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..c.len() {
        let r = c[j] * c[j] + s[j] * s[j];
        acc += 0.25 * r * r - p / 2.0 * (c[j] * c[j] - s[j] * s[j]) + 0.5 * r;
    }
    acc - 0.5 * problem_xi.quadratic_form(c) - 0.5 * problem_xi.quadratic_form(s)
}

/// `grad U_d` as the concatenation `(dU/dc, dU/ds)`.
pub fn grad_dopo(problem_xi: &IsingProblem, p: f64, c: &[f64], s: &[f64]) -> Vec<f64> {
    let n = c.len();
    let xi = problem_xi.coupling();
    let mut g = vec![0.0; 2 * n];
    for j in 0..n {
        let r = c[j] * c[j] + s[j] * s[j];
        let (mut xc, mut xs) = (0.0, 0.0);
        for l in 0..n {
            xc += xi[(j, l)] * c[l];
            xs += xi[(j, l)] * s[l];
        }
        g[j] = (1.0 - p + r) * c[j] - xc;
        g[n + j] = (1.0 + p + r) * s[j] - xs;
    }
    g
}

/// Hessian of `U_d` in the `(c, s)` ordering.
pub fn hess_dopo(problem_xi: &IsingProblem, p: f64, c: &[f64], s: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    let xi = problem_xi.coupling();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        let r = c[j] * c[j] + s[j] * s[j];
        for l in 0..n {
            h[(j, l)] = -xi[(j, l)];
            h[(n + j, n + l)] = -xi[(j, l)];
        }
        h[(j, j)] = 1.0 - p + r + 2.0 * c[j] * c[j];
        h[(n + j, n + j)] = 1.0 + p + r + 2.0 * s[j] * s[j];
        h[(j, n + j)] = 2.0 * c[j] * s[j];
        h[(n + j, j)] = 2.0 * c[j] * s[j];
    }
    h
}

/// Damped Newton on `grad U_d`. Returns `(c, s)` when `|grad| <= tol` within 200 iterations.
pub fn newton_dopo(
    problem_xi: &IsingProblem,
    p: f64,
    init_c: &[f64],
    init_s: &[f64],
    tol: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = init_c.len();
    let mut z = [init_c, init_s].concat();
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut g = grad_dopo(problem_xi, p, &z[..n], &z[n..]);
    for _ in 0..200 {
        let gn = norm(&g);
        if gn <= tol {
            return Some((z[..n].to_vec(), z[n..].to_vec()));
        }
        let h = hess_dopo(problem_xi, p, &z[..n], &z[n..]);
        let rhs = DVector::from_iterator(2 * n, g.iter().map(|v| -v));
        let dir: Vec<f64> = match h.lu().solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d.iter().copied().collect(),
            _ => rhs.iter().copied().collect(),
        };
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let gt = grad_dopo(problem_xi, p, &trial[..n], &trial[n..]);
            if norm(&gt) < gn || step < 1e-12 {
                z = trial;
                g = gt;
                break;
            }
            step *= 0.5;
        }
    }
    None
}

/// DOPO network, the gradient flow of `U_d`; `c` is stored as `x` and `s` as `y`.
pub fn integrate_dopo(
    problem_xi: &IsingProblem,
    p: f64,
    init_c: &[f64],
    init_s: &[f64],
    dt: f64,
    t_max: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    let n = problem_xi.n();
    for len in [init_c.len(), init_s.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let bound = 10.0 * (1.0 + (p.abs() + problem_xi.spectral_radius()).sqrt());
    let field = |_t: f64, z: &[f64], dz: &mut [f64]| {
        let g = grad_dopo(problem_xi, p, &z[..n], &z[n..]);
        for (d, gi) in dz.iter_mut().zip(g) {
            *d = -gi;
        }
    };
    let sample = |t: f64, z: &[f64]| TrajectorySample {
        t,
        alpha: p.max(0.0).sqrt(),
        h: potential_dopo(problem_xi, p, &z[..n], &z[n..]),
        x: z[..n].to_vec(),
        y: z[n..].to_vec(),
        in_capture: None,
    };
    let z0 = [init_c, init_s].concat();
    drive_rk4(n, z0, 0.0, dt, t_max, record_stride, bound, field, sample)
}

/// Configuration of the end-to-end SB solver. `None` fields are derived from the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub beta: f64,
    /// Calibrated threshold; computed when absent.
    pub alpha_star: Option<f64>,
    /// Final pump; defaults to `8.5 * alpha_star`.
    pub alpha_inf: Option<f64>,
    pub schedule_kind: ScheduleKind,
    pub ramp_time: f64,
    pub dt: Option<f64>,
    /// Defaults to twice the ramp time.
    pub t_max: Option<f64>,
    pub seed: u64,
    pub init_amplitude: f64,
    pub record_stride: usize,
    pub capture_check_stride: usize,
    pub integrator: Integrator,
    pub stop_on_capture: bool,
    /// Enumerate saddles for the B5/B6 estimates up to this `n`; larger instances use bounds.
    pub b5_enumeration_cap: usize,
    pub max_retries: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha_star: None,
            alpha_inf: None,
            schedule_kind: ScheduleKind::LinearSaturating,
            ramp_time: 50.0,
            dt: None,
            t_max: None,
            seed: 0,
            init_amplitude: 0.1,
            record_stride: 100,
            capture_check_stride: 10,
            integrator: Integrator::SymplecticEuler,
            stop_on_capture: true,
            b5_enumeration_cap: 8,
            max_retries: 8,
        }
    }
}

/// Pump level relative to the calibrated threshold used when `alpha_inf` is not given.
pub const DEFAULT_ALPHA_INF_FACTOR: f64 = 8.5;

/// Default step: `min(1e-2, 0.1 / (sqrt(2) alpha_inf))`, resolving the fastest oscillation at the minima.
pub fn default_dt(alpha_inf: f64) -> f64 {
    (0.1 / (std::f64::consts::SQRT_2 * alpha_inf)).min(1e-2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub spins: SpinConfig,
    pub captured: bool,
    pub capture_time: Option<f64>,
    /// Report at the first capture, or the last check when capture never fired.
    pub capture: Option<CaptureReport>,
    /// Every capture check in order.
    pub checks: Vec<CaptureReport>,
    pub trajectory: Trajectory,
    pub alpha_star: f64,
    pub alpha_inf: f64,
    pub dt: f64,
    /// Runs needed to obtain a readout with no zero component.
    pub attempts: usize,
}

/// Resolved run parameters shared by all attempts of one solve.
pub struct SolvePlan {
    pub alpha_star: f64,
    pub schedule: Schedule,
    pub dt: f64,
    pub t_max: f64,
    pub context: CaptureContext,
}

pub fn plan_solve(problem: &IsingProblem, config: &SolveConfig) -> Result<SolvePlan> {
    let alpha_star = match config.alpha_star {
        Some(a) => a,
        None if problem.n() <= DEFAULT_SEED_CAP => calibrate_alpha(problem, config.beta)?.alpha,
        None => heuristic_alpha(problem, config.beta),
    };
    let alpha_inf = config.alpha_inf.unwrap_or(DEFAULT_ALPHA_INF_FACTOR * alpha_star);
    let schedule = match config.schedule_kind {
        ScheduleKind::Constant => Schedule::constant(alpha_inf)?,
        kind => Schedule::new(kind, 0.0, alpha_inf, config.ramp_time)?,
    };
    let dt = config.dt.unwrap_or_else(|| default_dt(alpha_inf));
    let t_max = config.t_max.unwrap_or(2.0 * config.ramp_time);
    let context = CaptureContext::build(problem, config.beta, schedule, alpha_star, config.b5_enumeration_cap)?;
    Ok(SolvePlan { alpha_star, schedule, dt, t_max, context })
}

/// Ramped SB from a small random start, stopped by the capture rule.
pub fn solve(problem: &IsingProblem, config: &SolveConfig) -> Result<SolveOutcome> {
    let plan = plan_solve(problem, config)?;
    solve_planned(problem, config, &plan)
}

pub fn solve_planned(problem: &IsingProblem, config: &SolveConfig, plan: &SolvePlan) -> Result<SolveOutcome> {
    let n = problem.n();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let seed = config.seed.wrapping_add((attempts as u64 - 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = config.init_amplitude;
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-a..=a)).collect();
        let mut out = run_attempt(problem, config, plan, State::at_rest(x0))?;
        out.trajectory.seed = config.seed;
        out.attempts = attempts;
        let last = out.trajectory.last().expect("at least one sample");
        match sign_vector(&last.x).to_spins() {
            Some(spins) => {
                out.spins = spins;
                return Ok(out);
            }
            None if attempts > config.max_retries => {
                return Err(Error::Degenerate("readout kept a zero component after retries".into()));
            }
            None => continue,
        }
    }
}

fn run_attempt(problem: &IsingProblem, config: &SolveConfig, plan: &SolvePlan, init: State) -> Result<SolveOutcome> {
    let beta = config.beta;
    let schedule = &plan.schedule;
    let dt = plan.dt;
    let steps = step_count(dt, plan.t_max)?;
    let stride = config.record_stride.max(1);
    let check_stride = config.capture_check_stride.max(1);
    let bound = 10.0 * schedule.alpha_inf;
    let mut stepper = SbStepper::new(problem, beta, schedule, config.integrator);
    let mut state = init;
    let mut samples = vec![sb_sample(problem, beta, schedule, &state)];
    let mut checks = Vec::new();
    let mut first: Option<CaptureReport> = None;
    for k in 1..=steps {
        stepper.step(&mut state, k as f64 * dt);
        check_blowup(&state.x, &state.y, bound, state.t)?;
        let mut in_capture = None;
        let mut stop = false;
        if k % check_stride == 0 {
            let report = plan.context.check(&state);
            in_capture = Some(report.in_capture);
            if report.in_capture && first.is_none() {
                first = Some(report.clone());
                stop = config.stop_on_capture;
            }
            checks.push(report);
        }
        if k % stride == 0 || k == steps || stop {
            let mut s = sb_sample(problem, beta, schedule, &state);
            s.in_capture = in_capture;
            samples.push(s);
        }
        if stop {
            break;
        }
    }
    let captured = first.is_some();
    let capture = first.or_else(|| checks.last().cloned());
    Ok(SolveOutcome {
        spins: SpinConfig::from_bits(0, problem.n()),
        captured,
        capture_time: capture.as_ref().filter(|c| c.in_capture).map(|c| c.t),
        capture,
        checks,
        trajectory: Trajectory { samples, dt, integrator: config.integrator, record_stride: stride, seed: 0 },
        alpha_star: plan.alpha_star,
        alpha_inf: schedule.alpha_inf,
        dt,
        attempts: 0,
    })
}

/// Convenience for tests and tools: `U` at the schedule's value at time `t`.
pub fn potential_at(problem: &IsingProblem, beta: f64, schedule: &Schedule, t: f64, x: &[f64]) -> f64 {
    let a = schedule.alpha(t);
    potential::value_unchecked(problem, beta - a * a, x)
}
