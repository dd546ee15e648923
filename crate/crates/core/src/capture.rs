//! Hill regions, transit and capture, the capture-set stopping rule and the
//! linearization of the two-spin saddle ("neck").

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Schedule, State, Trajectory};
use crate::error::{Error, Result};
use crate::ising::{sign_vector, IsingProblem, SignVector};
use crate::potential::{
    find_critical_points, grad_into, r2_closed_form, value_unchecked, LandscapeSummary, PointClass,
    PotentialParams,
};

/// Sub-level set `{x : U(x) < c}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HillQuery {
    pub c: f64,
    pub params: PotentialParams,
}

pub fn hill_contains(query: &HillQuery, x: &[f64]) -> Result<bool> {
    Ok(query.params.eval_u(x)? < query.c)
}

/// Lowest saddle value; a constant-alpha orbit with `H` below it cannot transit.
pub fn saddle_floor_threshold(summary: &LandscapeSummary) -> Option<f64> {
    summary.u_s
}

fn index_one_values(params: &PotentialParams) -> Result<Vec<(f64, Vec<f64>, PointClass)>> {
    let summary = find_critical_points(params)?;
    Ok(summary
        .critical_points
        .into_iter()
        .filter(|c| c.morse_index == 1 && c.nullity == 0)
        .map(|c| (c.value, c.x, c.class))
        .collect())
}

fn check_samples(alpha_samples: &[f64]) -> Result<()> {
    if alpha_samples.is_empty() {
        return Err(Error::InvalidParameter("at least one alpha sample is required".into()));
    }
    Ok(())
}

/// Twice the largest deviation `|U_s / alpha^2 + (n - 1) alpha^2 / 4|` over the samples,
/// with `U_s` the lowest index-1 critical value.
pub fn estimate_b5(problem: &IsingProblem, beta: f64, alpha_samples: &[f64]) -> Result<f64> {
    check_samples(alpha_samples)?;
    let n = problem.n() as f64;
    let mut worst = 0.0_f64;
    for &alpha in alpha_samples {
        let params = PotentialParams::new(problem.clone(), alpha, beta)?;
        let us = index_one_values(&params)?
            .into_iter()
            .map(|v| v.0)
            .reduce(f64::min)
            .ok_or_else(|| Error::Degenerate(format!("no index-1 critical point at alpha = {alpha}")))?;
        let a2 = alpha * alpha;
        worst = worst.max((us / a2 + (n - 1.0) * a2 / 4.0).abs());
    }
    Ok(2.0 * worst)
}

/// Conservative lower bound `B6` with `|x|^2 >= n alpha^2 + B6` at every local minimum.
pub fn estimate_b6(problem: &IsingProblem, beta: f64, alpha_samples: &[f64]) -> Result<f64> {
    check_samples(alpha_samples)?;
    let n = problem.n() as f64;
    let mut least = f64::INFINITY;
    for &alpha in alpha_samples {
        let params = PotentialParams::new(problem.clone(), alpha, beta)?;
        let summary = find_critical_points(&params)?;
        for c in summary.minima() {
            let r: f64 = c.x.iter().map(|v| v * v).sum();
            least = least.min(r - n * alpha * alpha);
        }
    }
    if !least.is_finite() {
        return Err(Error::Degenerate("no minima found".into()));
    }
    Ok(2.0 * least.min(0.0))
}

/// Bound on `B5` from the size of the couplings, for instances too large to enumerate.
pub fn b5_bound(problem: &IsingProblem, beta: f64) -> f64 {
    let n = problem.n() as f64;
    let abs_sum: f64 = problem.coupling().iter().map(|s| s.abs()).sum();
    2.0 * (beta * (n - 1.0) / 2.0 + 0.5 * abs_sum + 1.0)
}

pub fn b6_bound(problem: &IsingProblem, beta: f64) -> f64 {
    let n = problem.n() as f64;
    let abs_sum: f64 = problem.coupling().iter().map(|s| s.abs()).sum();
    -2.0 * (n * beta + abs_sum + 1.0)
}

/// `min_{|x|^2 = r0_sq} U(x)`. Extra starting directions (e.g. normalized minima) may be supplied.
pub fn min_on_sphere(params: &PotentialParams, r0_sq: f64) -> Result<f64> {
    min_on_sphere_with_starts(params, r0_sq, &[])
}

pub fn min_on_sphere_with_starts(params: &PotentialParams, r0_sq: f64, extra: &[Vec<f64>]) -> Result<f64> {
    if !(r0_sq.is_finite() && r0_sq >= 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius squared must be non-negative, got {r0_sq}")));
    }
    if r0_sq == 0.0 {
        return Ok(0.0);
    }
    // On the sphere the quadratic term is the constant shift * r0 / 2.
    Ok(sphere_quartic_min(params.problem(), r0_sq, extra) + 0.5 * params.shift() * r0_sq)
}

/// Minimum of `sum x^4 / 4 - x^T S x / 2` over `|x|^2 = r0_sq` by multi-start projected descent.
pub fn sphere_quartic_min(problem: &IsingProblem, r0_sq: f64, extra: &[Vec<f64>]) -> f64 {
    let n = problem.n();
    let r = r0_sq.sqrt();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            starts.push(e);
        }
    }
    if n <= 8 {
        for bits in 0..(1u64 << n) {
            starts.push((0..n).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect());
        }
    }
    starts.extend(extra.iter().filter(|v| v.len() == n).cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0F5F_4E5E);
    for _ in 0..8 {
        starts.push((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
    }

    let f = |x: &[f64]| value_unchecked(problem, 0.0, x);
    let mut best = f64::INFINITY;
    let mut g = vec![0.0; n];
    for start in starts {
        let nrm = start.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 || !nrm.is_finite() {
            continue;
        }
        let mut x: Vec<f64> = start.iter().map(|v| v * r / nrm).collect();
        let mut fx = f(&x);
        let mut step = 1.0 / (1.0 + r0_sq);
        for _ in 0..2000 {
            grad_into(problem, 0.0, &x, &mut g);
            let radial = g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / r0_sq;
            let rg: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - radial * b).collect();
            let rg_norm = rg.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rg_norm <= 1e-13 * (1.0 + r0_sq * r) {
                break;
            }
            let mut improved = false;
            while step > 1e-18 {
                let mut trial: Vec<f64> = x.iter().zip(&rg).map(|(a, b)| a - step * b).collect();
                let tn = trial.iter().map(|v| v * v).sum::<f64>().sqrt();
                trial.iter_mut().for_each(|v| *v *= r / tn);
                let ft = f(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    improved = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(fx);
    }
    best
}

fn is_canonical_two_spin(problem: &IsingProblem) -> bool {
    *problem == IsingProblem::canonical_two_spin()
}

/// Quantities of the capture test that do not depend on the state.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureContext {
    problem: IsingProblem,
    pub beta: f64,
    pub schedule: Schedule,
    pub alpha_star: f64,
    pub b5: f64,
    pub b6: f64,
    pub r0: f64,
    /// `min_{|x|^2 = r0} (sum x^4 / 4 - x^T S x / 2)`.
    pub q_r0: f64,
    /// Two-spin specialization with the `U_sd` threshold.
    pub specialized: bool,
    /// `alpha_inf > 8 alpha_star` or `alpha_inf^2 >= 10 |2 (B5 - B6)|` fails.
    pub assumption_violated: bool,
    /// Smallest alpha for which the test is meaningful.
    pub alpha_valid: f64,
}

impl CaptureContext {
    pub fn new(problem: &IsingProblem, beta: f64, schedule: Schedule, alpha_star: f64, b5: f64, b6: f64) -> Result<Self> {
        if !(alpha_star.is_finite() && alpha_star > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha_star must be positive, got {alpha_star}")));
        }
        let n = problem.n() as f64;
        let ainf2 = schedule.alpha_inf * schedule.alpha_inf;
        let specialized = is_canonical_two_spin(problem);
        let (r0, alpha_valid) = if specialized {
            let r0 = (ainf2 - beta) / 2.0;
            (r0, (0.75 * ainf2 + 0.25 * beta).sqrt())
        } else {
            let r0 = (n - 1.0) * ainf2 / 2.0 + b5;
            let a2 = ((n - 1.0) * ainf2 / (2.0 * n) + (b5 - b6) / n).max(0.5 * ainf2);
            (r0, (2.0 * alpha_star).max(a2.sqrt()))
        };
        if r0.is_nan() || r0 <= 0.0 {
            return Err(Error::Degenerate(format!("capture radius R0 = {r0} is not positive")));
        }
        let q_r0 = sphere_quartic_min(problem, r0, &[]);
        let assumption_violated = !(schedule.alpha_inf > 8.0 * alpha_star && ainf2 >= 10.0 * (2.0 * (b5 - b6)).abs());
        Ok(Self {
            problem: problem.clone(),
            beta,
            schedule,
            alpha_star,
            b5,
            b6,
            r0,
            q_r0,
            specialized,
            assumption_violated,
            alpha_valid,
        })
    }

    /// Estimates `B5` and `B6` (enumerating saddles when `n <= enumeration_cap`) and builds the context.
    pub fn build(
        problem: &IsingProblem,
        beta: f64,
        schedule: Schedule,
        alpha_star: f64,
        enumeration_cap: usize,
    ) -> Result<Self> {
        let (b5, b6) = if problem.n() <= enumeration_cap {
            let lo = (2.0 * alpha_star).min(schedule.alpha_inf);
            let hi = schedule.alpha_inf;
            let samples = [lo, 0.5 * (lo + hi), hi];
            (estimate_b5(problem, beta, &samples)?, estimate_b6(problem, beta, &samples)?)
        } else {
            (b5_bound(problem, beta), b6_bound(problem, beta))
        };
        Self::new(problem, beta, schedule, alpha_star, b5, b6)
    }

    pub fn u_r0(&self, alpha: f64) -> f64 {
        self.q_r0 + 0.5 * (self.beta - alpha * alpha) * self.r0
    }

    pub fn u_b(&self, alpha: f64) -> f64 {
        let n = self.problem.n() as f64;
        let a2 = alpha * alpha;
        -(n - 1.0) * a2 * a2 / 4.0 - self.b5 * a2
    }

    pub fn u_sd(&self, alpha: f64) -> f64 {
        let d = alpha * alpha - self.beta;
        -d * d / 4.0
    }

    /// Evaluates the capture test at an SB state; `H` uses the schedule's alpha at `state.t`.
    pub fn check(&self, state: &State) -> CaptureReport {
        let alpha = self.schedule.alpha(state.t);
        let norm_sq: f64 = state.x.iter().map(|v| v * v).sum();
        let kinetic: f64 = 0.5 * state.y.iter().map(|v| v * v).sum::<f64>();
        let h = kinetic + value_unchecked(&self.problem, self.beta - alpha * alpha, &state.x);
        let u_r0 = self.u_r0(alpha);
        let u_b = self.u_b(alpha);
        let u_sd = self.specialized.then(|| self.u_sd(alpha));
        let premature = alpha < self.alpha_valid;
        let in_capture = !premature
            && if let Some(u_sd) = u_sd {
                h <= u_r0.min(u_sd)
            } else {
                norm_sq > self.r0 && h <= u_r0.min(u_b)
            };
        CaptureReport {
            in_capture,
            t: state.t,
            h,
            u_r0,
            u_b,
            u_sd,
            r0: self.r0,
            norm_sq,
            b5_estimate: self.b5,
            premature,
            assumption_violated: self.assumption_violated,
            signs: sign_vector(&state.x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureReport {
    pub in_capture: bool,
    pub t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "U_R0")]
    pub u_r0: f64,
    #[serde(rename = "U_B")]
    pub u_b: f64,
    /// Axis threshold of the two-spin specialization.
    #[serde(rename = "U_sd")]
    pub u_sd: Option<f64>,
    pub r0: f64,
    pub norm_sq: f64,
    pub b5_estimate: f64,
    /// Alpha was still below the validity region of the test.
    pub premature: bool,
    pub assumption_violated: bool,
    pub signs: SignVector,
}

/// Capture test at one state; see [`CaptureContext`] for reuse across a run.
pub fn capture_test(
    problem: &IsingProblem,
    beta: f64,
    schedule: &Schedule,
    state: &State,
    b5: f64,
    alpha_star: f64,
) -> Result<CaptureReport> {
    let n = problem.n();
    if state.x.len() != n || state.y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: state.x.len() });
    }
    let b6 = b6_bound(problem, beta);
    Ok(CaptureContext::new(problem, beta, *schedule, alpha_star, b5, b6)?.check(state))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitKind {
    Transit,
    Capture,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitVerdict {
    pub kind: TransitKind,
    /// Time of the first entry into each visited neighbourhood.
    pub witness_times: Vec<f64>,
    /// Sign vectors of the visited minima, in order of first visit.
    pub minima_visited: Vec<SignVector>,
}

/// One third of the least distance between two minima, or infinity with fewer than two.
pub fn default_nbhd_radius(summary: &LandscapeSummary) -> f64 {
    let minima = summary.minima();
    let mut least = f64::INFINITY;
    for (i, a) in minima.iter().enumerate() {
        for b in &minima[i + 1..] {
            let d = a.x.iter().zip(&b.x).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            least = least.min(d);
        }
    }
    least / 3.0
}

/// Transit if two distinct minimum neighbourhoods are visited, capture if the last fifth
/// of the samples stays in one neighbourhood.
pub fn classify_trajectory(
    traj: &Trajectory,
    summary: &LandscapeSummary,
    nbhd_radius: Option<f64>,
) -> Result<TransitVerdict> {
    let minima = summary.minima();
    let radius = nbhd_radius.unwrap_or_else(|| default_nbhd_radius(summary));
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidParameter(format!("neighbourhood radius must be positive, got {radius}")));
    }
    let locate = |x: &[f64]| {
        minima.iter().position(|m| m.x.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt() < radius)
    };
    let mut visited: Vec<usize> = Vec::new();
    let mut witness_times = Vec::new();
    let mut inside: Vec<Option<usize>> = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let here = locate(&s.x);
        if let Some(k) = here {
            if !visited.contains(&k) {
                visited.push(k);
                witness_times.push(s.t);
            }
        }
        inside.push(here);
    }
    let minima_visited = visited.iter().map(|&k| sign_vector(&minima[k].x)).collect();
    let kind = if visited.len() >= 2 {
        TransitKind::Transit
    } else {
        let tail = inside.len().div_ceil(5);
        let tail = &inside[inside.len() - tail..];
        match tail.first() {
            Some(Some(k)) if tail.iter().all(|t| *t == Some(*k)) => TransitKind::Capture,
            _ => TransitKind::Undetermined,
        }
    };
    Ok(TransitVerdict { kind, witness_times, minima_visited })
}

/// A complex 4-vector in the `(y1, y2, x1, x2)` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckVector {
    pub re: [f64; 4],
    pub im: [f64; 4],
}

/// Linearization of the two-spin SB system at the saddle `(lambda3, -lambda4)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeckAnalysis {
    pub alpha: f64,
    pub beta: f64,
    pub saddle: [f64; 2],
    pub lambda3: f64,
    pub lambda4: f64,
    /// Hyperbolic rate; eigenvalues `-mu1, mu1`.
    pub mu1: f64,
    /// Elliptic frequency; eigenvalues `-i mu2_im, i mu2_im`.
    pub mu2_im: f64,
    pub u: f64,
    pub v: f64,
    /// Eigenvectors for `-mu1`, `mu1`, `-i mu2_im`, `i mu2_im` in that order.
    pub eigvecs: [NeckVector; 4],
}

/// Coordinates of a phase-space deviation in the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckCoords {
    pub xi1: f64,
    pub xi2: f64,
    pub eta_re: f64,
    pub eta_im: f64,
}

pub fn neck_linearize(beta: f64, alpha: f64) -> Result<NeckAnalysis> {
    let a = alpha * alpha - beta;
    if a.is_nan() || a <= 2.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha^2 - beta = {a} must exceed 2 for the saddle (lambda3, -lambda4) to exist"
        )));
    }
    let cf = r2_closed_form(alpha, beta)?;
    let (l3, l4) = (cf.lambda3.expect("a > 2"), cf.lambda4.expect("a > 2"));
    let d9 = (9.0 * a * a - 32.0).sqrt();
    let d = (a * a - 4.0).sqrt();
    let mu1 = ((d9 - a) / 2.0).sqrt();
    let w = ((d9 + a) / 2.0).sqrt();
    let u = 0.5 * d9 - 1.5 * d;
    let v = 0.5 * d9 + 1.5 * d;
    let real = |e: [f64; 4]| NeckVector { re: e, im: [0.0; 4] };
    let eigvecs = [
        real([-mu1 * u, -mu1, u, 1.0]),
        real([mu1 * u, mu1, u, 1.0]),
        NeckVector { re: [0.0, 0.0, -v, 1.0], im: [w * v, -w, 0.0, 0.0] },
        NeckVector { re: [0.0, 0.0, -v, 1.0], im: [-w * v, w, 0.0, 0.0] },
    ];
    Ok(NeckAnalysis { alpha, beta, saddle: [l3, -l4], lambda3: l3, lambda4: l4, mu1, mu2_im: w, u, v, eigvecs })
}

impl NeckAnalysis {
    /// Hessian of `H` at the saddle, `(y, x)` ordering.
    pub fn hessian(&self) -> Matrix4<f64> {
        let shift = self.beta - self.alpha * self.alpha;
        let k1 = 3.0 * self.lambda3 * self.lambda3 + shift;
        let k2 = 3.0 * self.lambda4 * self.lambda4 + shift;
        Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, k1, -1.0, //
            0.0, 0.0, -1.0, k2,
        )
    }

    /// `J4 D^2 H(z0)` with `J4 = [[0, -I], [I, 0]]`.
    pub fn jacobian(&self) -> Matrix4<f64> {
        let j4 = Matrix4::new(
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        );
        j4 * self.hessian()
    }

    /// Eigenvalues as `(re, im)` pairs, matching `eigvecs`.
    pub fn eigenvalues(&self) -> [(f64, f64); 4] {
        [(-self.mu1, 0.0), (self.mu1, 0.0), (0.0, -self.mu2_im), (0.0, self.mu2_im)]
    }

    /// `mu^4 + b mu^2 + c` at a complex `mu`, returned as `(re, im)`.
    pub fn characteristic(&self, mu: (f64, f64)) -> (f64, f64) {
        let shift = self.beta - self.alpha * self.alpha;
        let (l3s, l4s) = (self.lambda3 * self.lambda3, self.lambda4 * self.lambda4);
        let b = 3.0 * (l3s + l4s) + 2.0 * shift;
        let c = (3.0 * l3s + shift) * (3.0 * l4s + shift) - 1.0;
        let sq = (mu.0 * mu.0 - mu.1 * mu.1, 2.0 * mu.0 * mu.1);
        let quart = (sq.0 * sq.0 - sq.1 * sq.1, 2.0 * sq.0 * sq.1);
        (quart.0 + b * sq.0 + c, quart.1 + b * sq.1)
    }

    /// Largest `|J e - mu e|` over the four eigenpairs.
    pub fn eigen_residual(&self) -> f64 {
        let j = self.jacobian();
        let mut worst = 0.0_f64;
        for (e, (lr, li)) in self.eigvecs.iter().zip(self.eigenvalues()) {
            let re = Vector4::from(e.re);
            let im = Vector4::from(e.im);
            let jr = j * re;
            let ji = j * im;
            // (lr + i li)(re + i im)
            let mr = re * lr - im * li;
            let mi = im * lr + re * li;
            worst = worst.max((jr - mr).amax()).max((ji - mi).amax());
        }
        worst
    }

    fn basis(&self) -> Matrix4<f64> {
        let e1 = Vector4::from(self.eigvecs[0].re);
        let e2 = Vector4::from(self.eigvecs[1].re);
        let c_re = Vector4::from(self.eigvecs[2].re) * 2.0;
        let c_im = Vector4::from(self.eigvecs[2].im) * -2.0;
        Matrix4::from_columns(&[e1, e2, c_re, c_im])
    }

    /// Coordinates of the state `(x, y)` relative to the saddle at rest.
    pub fn decompose(&self, x: [f64; 2], y: [f64; 2]) -> NeckCoords {
        let dz = Vector4::new(y[0], y[1], x[0] - self.saddle[0], x[1] - self.saddle[1]);
        let c = self.basis().lu().solve(&dz).expect("eigenbasis is nonsingular");
        NeckCoords { xi1: c[0], xi2: c[1], eta_re: c[2], eta_im: c[3] }
    }

    /// The state whose deviation has the given coordinates, as `(x, y)`.
    pub fn compose(&self, c: NeckCoords) -> ([f64; 2], [f64; 2]) {
        self.linear_solution(c, 0.0)
    }

    /// Solution of the linearized system at time `t`, as `(x, y)`.
    pub fn linear_solution(&self, c: NeckCoords, t: f64) -> ([f64; 2], [f64; 2]) {
        let (cs, sn) = ((self.mu2_im * t).cos(), (self.mu2_im * t).sin());
        // eta * exp(-i w t)
        let er = c.eta_re * cs + c.eta_im * sn;
        let ei = c.eta_im * cs - c.eta_re * sn;
        let coeffs = Vector4::new(c.xi1 * (-self.mu1 * t).exp(), c.xi2 * (self.mu1 * t).exp(), er, ei);
        let dz = self.basis() * coeffs;
        ([self.saddle[0] + dz[2], self.saddle[1] + dz[3]], [dz[0], dz[1]])
    }

    /// Position along the hyperbolic direction `(u, 1)`, blind to the elliptic direction `(-v, 1)`.
    pub fn hyperbolic_coordinate(&self, x: [f64; 2]) -> f64 {
        ((x[0] - self.saddle[0]) + self.v * (x[1] - self.saddle[1])) / (self.u + self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeckOrbit {
    Periodic,
    Asymptotic,
    SaddleTransit,
    SaddleNonTransit,
}

pub fn classify_neck_orbit(xi1: f64, xi2: f64) -> NeckOrbit {
    match (xi1 == 0.0, xi2 == 0.0) {
        (true, true) => NeckOrbit::Periodic,
        (true, false) | (false, true) => NeckOrbit::Asymptotic,
        _ if xi1 * xi2 < 0.0 => NeckOrbit::SaddleTransit,
        _ => NeckOrbit::SaddleNonTransit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Clockwise,
    Counterclockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub major: f64,
    pub minor: f64,
    pub orientation: Orientation,
}

/// Predicted projection of the periodic orbit: axes `2 v |eta|` and `2 |eta|`, clockwise.
pub fn periodic_orbit_ellipse(analysis: &NeckAnalysis, eta_abs: f64) -> Result<Ellipse> {
    if !(eta_abs.is_finite() && eta_abs >= 0.0) {
        return Err(Error::InvalidParameter(format!("|eta| must be non-negative, got {eta_abs}")));
    }
    Ok(Ellipse { major: 2.0 * analysis.v * eta_abs, minor: 2.0 * eta_abs, orientation: Orientation::Clockwise })
}
