//! The quartic potential
//! `U(x) = sum x_i^4 / 4 + (beta - alpha^2) / 2 |x|^2 - x^T S x / 2`,
//! its critical points and their Morse classes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{brute_force, energy, sign_vector, IsingProblem, SignVector, DEFAULT_ORACLE_CAP};

/// Largest `n` for which the `3^n` Newton seeds are enumerated by default.
pub const DEFAULT_SEED_CAP: usize = 16;
pub const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialParams {
    pub alpha: f64,
    pub beta: f64,
    problem: IsingProblem,
}

impl PotentialParams {
    pub fn new(problem: IsingProblem, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        Ok(Self { alpha, beta, problem })
    }

    pub fn problem(&self) -> &IsingProblem {
        &self.problem
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    /// The quadratic coefficient `beta - alpha^2`.
    pub fn shift(&self) -> f64 {
        self.beta - self.alpha * self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.problem.clone(), alpha, self.beta)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::for_alpha(self.alpha)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        Ok(())
    }

    pub fn eval_u(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(value_unchecked(&self.problem, self.shift(), x))
    }

    pub fn grad_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut g = vec![0.0; x.len()];
        grad_into(&self.problem, self.shift(), x, &mut g);
        Ok(g)
    }

    pub fn hess_u(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(hess_unchecked(&self.problem, self.shift(), x))
    }
}

pub fn eval_u(params: &PotentialParams, x: &[f64]) -> Result<f64> {
    params.eval_u(x)
}

pub fn grad_u(params: &PotentialParams, x: &[f64]) -> Result<Vec<f64>> {
    params.grad_u(x)
}

pub fn hess_u(params: &PotentialParams, x: &[f64]) -> Result<DMatrix<f64>> {
    params.hess_u(x)
}

/// `U(x)` for a given quadratic coefficient `shift = beta - alpha^2`; no length check.
pub fn value_unchecked(problem: &IsingProblem, shift: f64, x: &[f64]) -> f64 {
    let mut quartic = 0.0;
    let mut square = 0.0;
    for &xi in x {
        let x2 = xi * xi;
        quartic += x2 * x2;
        square += x2;
    }
    0.25 * quartic + 0.5 * shift * square - 0.5 * problem.quadratic_form(x)
}

/// Writes `grad U(x)` into `out`; no length check.
pub fn grad_into(problem: &IsingProblem, shift: f64, x: &[f64], out: &mut [f64]) {
    let s = problem.coupling();
    let n = x.len();
    for i in 0..n {
        let mut sx = 0.0;
        for (j, xj) in x.iter().enumerate() {
            sx += s[(i, j)] * xj;
        }
        let xi = x[i];
        out[i] = xi * xi * xi + shift * xi - sx;
    }
}

pub fn hess_unchecked(problem: &IsingProblem, shift: f64, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let s = problem.coupling();
    DMatrix::from_fn(n, n, |i, j| if i == j { 3.0 * x[i] * x[i] + shift } else { -s[(i, j)] })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Tolerances that scale with the natural magnitudes of `U` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub newton: f64,
    pub dedup: f64,
    pub null: f64,
    pub value_tie: f64,
}

impl Tolerances {
    pub fn for_alpha(alpha: f64) -> Self {
        let a2 = alpha * alpha;
        Self {
            newton: 1e-10 * (1.0 + a2 * alpha),
            dedup: 1e-6 * (1.0 + alpha),
            null: 1e-8 * (1.0 + a2),
            value_tie: 1e-9 * (1.0 + a2 * a2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointClass {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

impl PointClass {
    pub fn from_counts(n: usize, morse_index: usize, nullity: usize) -> Self {
        if nullity > 0 {
            PointClass::Degenerate
        } else if morse_index == 0 {
            PointClass::Minimum
        } else if morse_index == n {
            PointClass::Maximum
        } else {
            PointClass::Saddle
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PointClass::Minimum => "min",
            PointClass::Saddle => "saddle",
            PointClass::Maximum => "max",
            PointClass::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub morse_index: usize,
    pub nullity: usize,
    pub class: PointClass,
    pub seed: SignVector,
}

/// Morse-classifies a critical point. The seed is the nearest member of `{-1,0,1}^n` to `x / alpha`.
pub fn classify(params: &PotentialParams, x: &[f64]) -> Result<CriticalPoint> {
    params.check(x)?;
    let seed = SignVector::new(
        x.iter().map(|&xi| (xi / params.alpha).round().clamp(-1.0, 1.0) as i8).collect(),
    )?;
    classify_with_seed(params, x, seed)
}

fn classify_with_seed(params: &PotentialParams, x: &[f64], seed: SignVector) -> Result<CriticalPoint> {
    let tol = params.tolerances();
    let g = params.grad_u(x)?;
    let grad_norm = norm(&g);
    if grad_norm.is_nan() || grad_norm > tol.newton {
        return Err(Error::NotCritical { grad_norm, tol: tol.newton });
    }
    let eig = SymmetricEigen::new(params.hess_u(x)?).eigenvalues;
    let morse_index = eig.iter().filter(|&&l| l < -tol.null).count();
    let nullity = eig.iter().filter(|&&l| l.abs() <= tol.null).count();
    Ok(CriticalPoint {
        x: x.to_vec(),
        value: params.eval_u(x)?,
        grad_norm,
        morse_index,
        nullity,
        class: PointClass::from_counts(x.len(), morse_index, nullity),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton on `grad U = 0` with backtracking on `|grad U|^2`.
pub fn newton(params: &PotentialParams, x0: &[f64]) -> NewtonOutcome {
    let problem = params.problem();
    let shift = params.shift();
    let tol = params.tolerances().newton;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut gt = vec![0.0; n];
    grad_into(problem, shift, &x, &mut g);
    let mut gn = norm(&g);
    let mut it = 0;
    let mut polish = 0;
    while it < NEWTON_MAX_ITER {
        if gn <= tol {
            // A couple of extra full steps push the residual to rounding level.
            if polish >= 2 {
                break;
            }
            polish += 1;
        }
        it += 1;
        let h = hess_unchecked(problem, shift, &x);
        let rhs = DVector::from_iterator(n, g.iter().map(|v| -v));
        let dir: Vec<f64> = match h.lu().solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d.iter().copied().collect(),
            _ => rhs.iter().copied().collect(),
        };
        let phi = gn * gn;
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-12 {
            for i in 0..n {
                trial[i] = x[i] + step * dir[i];
            }
            grad_into(problem, shift, &trial, &mut gt);
            let tn = norm(&gt);
            if tn * tn <= (1.0 - 1e-4 * step) * phi || (gn <= tol && tn <= gn) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut gt);
        gn = norm(&g);
    }
    NewtonOutcome { converged: gn <= tol, x, grad_norm: gn, iterations: it }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSummary {
    pub alpha: f64,
    pub beta: f64,
    pub critical_points: Vec<CriticalPoint>,
    #[serde(rename = "U_s")]
    pub u_s: Option<f64>,
    #[serde(rename = "U_M")]
    pub u_m: Option<f64>,
    pub count_by_class: BTreeMap<PointClass, usize>,
    /// Seeds whose Newton run did not converge.
    pub failed_seeds: Vec<SignVector>,
    /// Seeds that converged onto a point already found from an earlier seed.
    pub collided_seeds: Vec<SignVector>,
}

impl LandscapeSummary {
    pub fn count(&self, class: PointClass) -> usize {
        self.count_by_class.get(&class).copied().unwrap_or(0)
    }

    pub fn of_class(&self, class: PointClass) -> impl Iterator<Item = &CriticalPoint> {
        self.critical_points.iter().filter(move |c| c.class == class)
    }

    pub fn minima(&self) -> Vec<&CriticalPoint> {
        self.of_class(PointClass::Minimum).collect()
    }
}

/// Seed number `k` in base-3 order; component `i` is digit `i` minus one.
pub fn seed_from_index(k: u64, n: usize) -> Vec<i8> {
    let mut k = k;
    (0..n)
        .map(|_| {
            let d = (k % 3) as i8 - 1;
            k /= 3;
            d
        })
        .collect()
}

pub fn find_critical_points(params: &PotentialParams) -> Result<LandscapeSummary> {
    find_critical_points_with_cap(params, DEFAULT_SEED_CAP)
}

/// Runs Newton from every seed `alpha * {-1,0,1}^n`, deduplicates and classifies.
pub fn find_critical_points_with_cap(params: &PotentialParams, cap: usize) -> Result<LandscapeSummary> {
    let n = params.n();
    if n > cap || n > 39 {
        return Err(Error::CapExceeded { what: "critical-point seed", n, cap: cap.min(39) });
    }
    let tol = params.tolerances();
    let total = 3u64.pow(n as u32);
    let outcomes: Vec<NewtonOutcome> = (0..total)
        .into_par_iter()
        .map(|k| {
            let x0: Vec<f64> = seed_from_index(k, n).iter().map(|&s| params.alpha * f64::from(s)).collect();
            newton(params, &x0)
        })
        .collect();

    let mut failed_seeds = Vec::new();
    let mut conv: Vec<usize> = Vec::new();
    for (k, o) in outcomes.iter().enumerate() {
        if o.converged && o.x.iter().all(|v| v.is_finite()) {
            conv.push(k);
        } else {
            failed_seeds.push(SignVector::new(seed_from_index(k as u64, n))?);
        }
    }

    // Sweep along a generic projection so that only nearby candidates are compared.
    let weights: Vec<f64> = (0..n).map(|i| 0.5 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract()).collect();
    let wsum: f64 = weights.iter().sum();
    let proj = |x: &[f64]| x.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
    let mut order: Vec<(f64, usize)> = conv.iter().map(|&k| (proj(&outcomes[k].x), k)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut parent: BTreeMap<usize, usize> = conv.iter().map(|&k| (k, k)).collect();
    fn root(parent: &BTreeMap<usize, usize>, mut k: usize) -> usize {
        while parent[&k] != k {
            k = parent[&k];
        }
        k
    }
    let window = tol.dedup * wsum;
    for a in 0..order.len() {
        let (pa, ka) = order[a];
        let mut b = a;
        while b > 0 {
            b -= 1;
            let (pb, kb) = order[b];
            if pa - pb > window {
                break;
            }
            let close = outcomes[ka].x.iter().zip(&outcomes[kb].x).all(|(u, v)| (u - v).abs() <= tol.dedup);
            if close {
                let (ra, rb) = (root(&parent, ka), root(&parent, kb));
                if ra != rb {
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent.insert(hi, lo);
                }
            }
        }
    }

    let mut reps = Vec::new();
    let mut collided_seeds = Vec::new();
    for &k in &conv {
        if root(&parent, k) == k {
            reps.push(k);
        } else {
            collided_seeds.push(SignVector::new(seed_from_index(k as u64, n))?);
        }
    }

    let critical_points: Vec<CriticalPoint> = reps
        .par_iter()
        .map(|&k| {
            let seed = SignVector::new(seed_from_index(k as u64, n))?;
            classify_with_seed(params, &outcomes[k].x, seed)
        })
        .collect::<Result<_>>()?;

    Ok(summarize(params.alpha, params.beta, critical_points, failed_seeds, collided_seeds))
}

fn summarize(
    alpha: f64,
    beta: f64,
    critical_points: Vec<CriticalPoint>,
    failed_seeds: Vec<SignVector>,
    collided_seeds: Vec<SignVector>,
) -> LandscapeSummary {
    let mut count_by_class = BTreeMap::new();
    for c in &critical_points {
        *count_by_class.entry(c.class).or_insert(0) += 1;
    }
    let fold = |class: PointClass, f: fn(f64, f64) -> f64| {
        critical_points.iter().filter(|c| c.class == class).map(|c| c.value).reduce(f)
    };
    let u_s = fold(PointClass::Saddle, f64::min);
    let u_m = fold(PointClass::Minimum, f64::max);
    LandscapeSummary { alpha, beta, critical_points, u_s, u_m, count_by_class, failed_seeds, collided_seeds }
}

/// Minima within the value tie tolerance of the least minimum value.
pub fn global_minima(summary: &LandscapeSummary) -> Vec<CriticalPoint> {
    let tol = Tolerances::for_alpha(summary.alpha).value_tie;
    let minima = summary.minima();
    let Some(least) = minima.iter().map(|c| c.value).reduce(f64::min) else {
        return Vec::new();
    };
    minima.into_iter().filter(|c| c.value <= least + tol).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    /// False when the landscape was too large to enumerate and the heuristic was returned as is.
    pub verified: bool,
    pub attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub alpha_max: f64,
    pub seed_cap: usize,
    pub oracle_cap: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { alpha_max: 1e6, seed_cap: DEFAULT_SEED_CAP, oracle_cap: DEFAULT_ORACLE_CAP }
    }
}

/// Initial calibration guess `sqrt(beta + 2(1 + rho(S)))`.
pub fn heuristic_alpha(problem: &IsingProblem, beta: f64) -> f64 {
    (beta + 2.0 * (1.0 + problem.spectral_radius())).sqrt()
}

pub fn calibrate_alpha(problem: &IsingProblem, beta: f64) -> Result<Calibration> {
    calibrate_alpha_with(problem, beta, CalibrationOptions::default())
}

/// Doubles alpha from the heuristic start until the landscape passes [`landscape_checks`].
pub fn calibrate_alpha_with(problem: &IsingProblem, beta: f64, opts: CalibrationOptions) -> Result<Calibration> {
    let mut alpha = heuristic_alpha(problem, beta);
    PotentialParams::new(problem.clone(), alpha, beta)?;
    if problem.n() > opts.seed_cap {
        return Ok(Calibration { alpha, verified: false, attempts: 0 });
    }
    let oracle = if problem.n() <= opts.oracle_cap { Some(brute_force(problem)?) } else { None };
    let mut attempts = 0;
    while alpha <= opts.alpha_max {
        attempts += 1;
        let params = PotentialParams::new(problem.clone(), alpha, beta)?;
        let summary = find_critical_points_with_cap(&params, opts.seed_cap)?;
        if landscape_checks(problem, &summary, oracle.as_ref()).passed() {
            return Ok(Calibration { alpha, verified: true, attempts });
        }
        alpha *= 2.0;
    }
    Err(Error::CalibrationFailed { alpha_max: opts.alpha_max })
}

/// Outcome of the calibration predicates for one landscape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandscapeChecks {
    pub full_count: bool,
    pub minima_cover_signs: bool,
    pub global_minima_optimal: bool,
    pub ordering_consistent: bool,
}

impl LandscapeChecks {
    pub fn passed(&self) -> bool {
        self.full_count && self.minima_cover_signs && self.global_minima_optimal && self.ordering_consistent
    }
}

/// The predicates a calibrated alpha must satisfy: all `3^n` points, minima in every orthant,
/// global minima mapping to oracle minimizers, and minima sorted by `U` having non-decreasing `E`.
pub fn landscape_checks(
    problem: &IsingProblem,
    summary: &LandscapeSummary,
    oracle: Option<&crate::ising::OracleResult>,
) -> LandscapeChecks {
    let n = problem.n();
    let full_count = summary.critical_points.len() as u64 == 3u64.pow(n as u32) && summary.count(PointClass::Degenerate) == 0;

    let minima = summary.minima();
    let mut signs: Vec<SignVector> = minima.iter().map(|c| sign_vector(&c.x)).collect();
    signs.sort();
    signs.dedup();
    let minima_cover_signs =
        minima.len() == 1 << n && signs.len() == 1 << n && signs.iter().all(|s| s.zero_count() == 0);

    let (global_minima_optimal, ordering_consistent) = match oracle {
        None => (true, true),
        Some(oracle) if minima_cover_signs => {
            let optimal = global_minima(summary)
                .iter()
                .all(|c| sign_vector(&c.x).to_spins().is_some_and(|v| oracle.is_minimizer(&v)));
            (optimal, minima_ordering_consistent(problem, summary))
        }
        Some(_) => (false, false),
    };
    LandscapeChecks { full_count, minima_cover_signs, global_minima_optimal, ordering_consistent }
}

/// For every pair of minima with `U(a) < U(b)` beyond the tie tolerance, checks `E(sgn a) <= E(sgn b)`.
pub fn minima_ordering_consistent(problem: &IsingProblem, summary: &LandscapeSummary) -> bool {
    let tie = Tolerances::for_alpha(summary.alpha).value_tie;
    let e_tol = 1e-9 * (1.0 + problem.coupling().iter().map(|s| s.abs()).sum::<f64>());
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for c in summary.minima() {
        let Some(v) = sign_vector(&c.x).to_spins() else { return false };
        pairs.push((c.value, energy(problem, &v).expect("dimension checked")));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Running maximum of E over strictly lower U-levels must not exceed any later E.
    let mut max_e_below = f64::NEG_INFINITY;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start;
        while end < pairs.len() && pairs[end].0 <= pairs[start].0 + tie {
            end += 1;
        }
        for p in &pairs[start..end] {
            if p.1 + e_tol < max_e_below {
                return false;
            }
        }
        for p in &pairs[start..end] {
            max_e_below = max_e_below.max(p.1);
        }
        start = end;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum R2Regime {
    /// `alpha^2 < beta - 1`
    BelowFirst,
    /// `beta - 1 < alpha^2 < beta + 1`
    FirstToSecond,
    /// `beta + 1 < alpha^2 < beta + 2`
    SecondToThird,
    /// `alpha^2 > beta + 2`
    AboveThird,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Point {
    pub x: [f64; 2],
    pub class: PointClass,
}

/// Critical points of the two-spin ferromagnet `S = [[0,1],[1,0]]` in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2ClosedForm {
    pub alpha: f64,
    pub beta: f64,
    pub regime: R2Regime,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda3: Option<f64>,
    pub lambda4: Option<f64>,
    pub points: Vec<R2Point>,
    /// Value at the origin.
    pub c0: f64,
    /// Value at the saddles `(lambda3, -lambda4)` and images.
    pub c1: Option<f64>,
    /// Value at the local minima `(lambda2, -lambda2)`, `(-lambda2, lambda2)`.
    pub c2: Option<f64>,
    /// Value at `(lambda1, lambda1)`, `(-lambda1, -lambda1)`.
    pub c3: Option<f64>,
}

pub fn r2_closed_form(alpha: f64, beta: f64) -> Result<R2ClosedForm> {
    PotentialParams::new(IsingProblem::canonical_two_spin(), alpha, beta)?;
    let a = alpha * alpha - beta;
    for (edge, label) in [(-1.0, "beta - 1"), (1.0, "beta + 1"), (2.0, "beta + 2")] {
        if (a - edge).abs() <= 1e-12 * (1.0 + a.abs()) {
            return Err(Error::Degenerate(format!("alpha^2 = {label} is a bifurcation value")));
        }
    }
    let regime = if a < -1.0 {
        R2Regime::BelowFirst
    } else if a < 1.0 {
        R2Regime::FirstToSecond
    } else if a < 2.0 {
        R2Regime::SecondToThird
    } else {
        R2Regime::AboveThird
    };
    let lambda1 = (a > -1.0).then(|| (a + 1.0).sqrt());
    let lambda2 = (a > 1.0).then(|| (a - 1.0).sqrt());
    let (lambda3, lambda4) = if a > 2.0 {
        let d = (a * a - 4.0).sqrt();
        // lambda3 * lambda4 = 1 gives a cancellation-free lambda4.
        let l3 = ((a + d) / 2.0).sqrt();
        (Some(l3), Some(1.0 / l3))
    } else {
        (None, None)
    };

    let p = |x: [f64; 2], class| R2Point { x, class };
    let mut points = Vec::new();
    use PointClass::*;
    match regime {
        R2Regime::BelowFirst => points.push(p([0.0, 0.0], Minimum)),
        R2Regime::FirstToSecond => {
            let l1 = lambda1.unwrap();
            points.extend([p([l1, l1], Minimum), p([-l1, -l1], Minimum), p([0.0, 0.0], Saddle)]);
        }
        R2Regime::SecondToThird => {
            let (l1, l2) = (lambda1.unwrap(), lambda2.unwrap());
            points.extend([
                p([l1, l1], Minimum),
                p([-l1, -l1], Minimum),
                p([l2, -l2], Saddle),
                p([-l2, l2], Saddle),
                p([0.0, 0.0], Maximum),
            ]);
        }
        R2Regime::AboveThird => {
            let (l1, l2, l3, l4) = (lambda1.unwrap(), lambda2.unwrap(), lambda3.unwrap(), lambda4.unwrap());
            points.extend([
                p([l1, l1], Minimum),
                p([-l1, -l1], Minimum),
                p([l2, -l2], Minimum),
                p([-l2, l2], Minimum),
                p([l3, -l4], Saddle),
                p([-l3, l4], Saddle),
                p([l4, -l3], Saddle),
                p([-l4, l3], Saddle),
                p([0.0, 0.0], Maximum),
            ]);
        }
    }

    Ok(R2ClosedForm {
        alpha,
        beta,
        regime,
        lambda1,
        lambda2,
        lambda3,
        lambda4,
        points,
        c0: 0.0,
        c1: (a > 2.0).then(|| -a * a / 4.0 + 0.5),
        c2: (a > 1.0).then(|| -(a - 1.0) * (a - 1.0) / 2.0),
        c3: (a > -1.0).then(|| -(a + 1.0) * (a + 1.0) / 2.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubicSign {
    Plus,
    Minus,
}

impl CubicSign {
    pub fn value(self) -> f64 {
        match self {
            CubicSign::Plus => 1.0,
            CubicSign::Minus => -1.0,
        }
    }
}

/// Evaluates `x^3 / alpha^2 - x + sign * eps`.
pub fn cubic_residual(alpha: f64, eps: f64, sign: CubicSign, x: f64) -> f64 {
    x * x * x / (alpha * alpha) - x + sign.value() * eps
}

/// The three real roots of `x^3 / alpha^2 - x + sign * eps`, in increasing order.
pub fn cubic_roots(alpha: f64, eps: f64, sign: CubicSign) -> Result<[f64; 3]> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive and finite, got {alpha}")));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be non-negative and finite, got {eps}")));
    }
    if eps == 0.0 {
        return Ok([-alpha, 0.0, alpha]);
    }
    let threshold = (27.0 * eps * eps / 4.0).sqrt();
    if alpha <= threshold {
        return Err(Error::ComplexRoots { alpha, threshold });
    }
    // Monic form x^3 - alpha^2 x + q with q = sign * eps * alpha^2, trigonometric solution.
    let a2 = alpha * alpha;
    let q = sign.value() * eps * a2;
    let m = 2.0 * alpha / 3f64.sqrt();
    let arg = (-q / 2.0 * (27.0 / (a2 * a2 * a2)).sqrt()).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    let mut all = [m * phi.cos(), m * (phi - tau).cos(), m * (phi - 2.0 * tau).cos()];
    all.sort_by(|a, b| a.total_cmp(b));
    // The middle root is small; Vieta's product avoids the cancellation in its cosine.
    all[1] = -q / (all[0] * all[2]);
    for r in all.iter_mut() {
        for _ in 0..3 {
            let f = cubic_residual(alpha, eps, sign, *r);
            let df = 3.0 * *r * *r / a2 - 1.0;
            if df == 0.0 {
                break;
            }
            let next = *r - f / df;
            if cubic_residual(alpha, eps, sign, next).abs() >= f.abs() {
                break;
            }
            *r = next;
        }
    }
    all.sort_by(|a, b| a.total_cmp(b));
    Ok(all)
}
