//! Acceptance criteria 1 to 12, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::Command;
use std::time::Instant;

use isingflow::capture::{classify_neck_orbit, classify_trajectory, NeckCoords, NeckOrbit, Orientation};
use isingflow::dynamics::{
    hamiltonian_sb, integrate_dopo, integrate_gradient_cim, integrate_sb_with, newton_dopo, plan_solve,
    solve_planned, SbOptions, Trajectory,
};
use isingflow::harness::CampaignConfig;
use isingflow::potential::{cubic_residual, minima_ordering_consistent, CubicSign};
use isingflow::{
    brute_force, calibrate_alpha, cubic_roots, find_critical_points, global_minima, neck_linearize,
    periodic_orbit_ellipse, r2_closed_form, random_instance, run_campaign, sign_vector, AlphaPolicy, Distribution,
    InstanceSpec, Integrator, IsingProblem, PotentialParams, Schedule, SolveConfig, State, TransitKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn s2() -> IsingProblem {
    IsingProblem::canonical_two_spin()
}

fn params(problem: IsingProblem, alpha: f64, beta: f64) -> PotentialParams {
    PotentialParams::new(problem, alpha, beta).expect("valid parameters")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for (alpha, expected) in [(0.9, 1), (2f64.sqrt(), 3), (3.5f64.sqrt(), 5), (5.0, 9)] {
        let summary = find_critical_points(&params(s2(), alpha, 2.0)).unwrap();
        let cf = r2_closed_form(alpha, 2.0).unwrap();
        if summary.critical_points.len() != expected || cf.points.len() != expected {
            problems.push(format!("alpha={alpha}: {} points", summary.critical_points.len()));
            continue;
        }
        for pt in &cf.points {
            let hit = summary.critical_points.iter().find(|c| {
                (c.x[0] - pt.x[0]).abs() <= 1e-8 && (c.x[1] - pt.x[1]).abs() <= 1e-8
            });
            match hit {
                Some(c) if c.class == pt.class => {}
                Some(c) => problems.push(format!("alpha={alpha}: class {:?} vs {:?}", c.class, pt.class)),
                None => problems.push(format!("alpha={alpha}: no match for {:?}", pt.x)),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        problems.push(format!("runtime {secs:.2}s"));
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("counts 1/3/5/9, {secs:.3}s") } else { problems.join("; ") })
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let problem = IsingProblem::three_spin_example();
    let summary = find_critical_points(&params(problem.clone(), 5.0, 10.0)).unwrap();
    let mut problems = Vec::new();
    if summary.critical_points.len() != 27 {
        problems.push(format!("{} critical points", summary.critical_points.len()));
    }
    let minima = summary.minima();
    let mut signs: Vec<Vec<i8>> = minima.iter().map(|c| sign_vector(&c.x).signs().to_vec()).collect();
    signs.sort();
    signs.dedup();
    if minima.len() != 8 || signs.len() != 8 || signs.iter().any(|s| s.contains(&0)) {
        problems.push(format!("{} minima covering {} sign vectors", minima.len(), signs.len()));
    }
    let reported = [-3.5, 3.7, 4.0];
    let globals = global_minima(&summary);
    for g in &globals {
        let s = if g.x[0] < 0.0 { 1.0 } else { -1.0 };
        let off = g.x.iter().zip(reported).map(|(x, r)| (x - s * r).abs()).fold(0.0, f64::max);
        if off > 0.05 {
            problems.push(format!("global minimum {:.4?} is {off:.3} from the reported point", g.x));
        }
    }
    let oracle = brute_force(&problem).unwrap();
    let mut gsigns: Vec<_> = globals.iter().filter_map(|g| sign_vector(&g.x).to_spins()).collect();
    gsigns.sort();
    if gsigns != oracle.minimizers {
        problems.push("global minima signs differ from the oracle minimizers".into());
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        problems.push(format!("runtime {secs:.2}s"));
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("{secs:.3}s") } else { problems.join("; ") })
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut violations = Vec::new();
    for k in 0..50u64 {
        let n = 3 + (k as usize % 8);
        let spec = InstanceSpec { n, distribution: Distribution::SpinGlassPM1, density: 1.0, seed: 1000 + k };
        let problem = random_instance(&spec).unwrap();
        let beta = 1.0;
        let cal = match calibrate_alpha(&problem, beta) {
            Ok(c) => c,
            Err(e) => {
                violations.push(format!("seed {}: calibration failed: {e}", spec.seed));
                continue;
            }
        };
        let summary = find_critical_points(&params(problem.clone(), cal.alpha, beta)).unwrap();
        let oracle = brute_force(&problem).unwrap();
        let optimal = global_minima(&summary)
            .iter()
            .all(|g| sign_vector(&g.x).to_spins().is_some_and(|v| oracle.is_minimizer(&v)));
        if !optimal {
            violations.push(format!("seed {}: global minimum not an oracle minimizer", spec.seed));
        }
        if !minima_ordering_consistent(&problem, &summary) {
            violations.push(format!("seed {}: ordering violated", spec.seed));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 120.0 {
        violations.push(format!("runtime {secs:.1}s"));
    }
    let detail = if violations.is_empty() { format!("50 instances, 0 violations, {secs:.1}s") } else { violations.join("; ") };
    outcome(violations.is_empty(), detail)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
    for k in 0..10u64 {
        let spec = InstanceSpec { n: 2 + k as usize % 7, distribution: Distribution::Gaussian, density: 1.0, seed: k };
        let problem = random_instance(&spec).unwrap();
        let n = problem.n();
        let p = params(problem, rng.random_range(0.5..6.0), rng.random_range(0.0..3.0));
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let g = p.grad_u(&x).unwrap();
            let h = p.hess_u(&x).unwrap();
            let mut fd_g = vec![0.0; n];
            let mut fd_h = nalgebra::DMatrix::zeros(n, n);
            for i in 0..n {
                let e = 1e-5 * (1.0 + x[i].abs());
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += e;
                xm[i] -= e;
                fd_g[i] = (p.eval_u(&xp).unwrap() - p.eval_u(&xm).unwrap()) / (2.0 * e);
                let (gp, gm) = (p.grad_u(&xp).unwrap(), p.grad_u(&xm).unwrap());
                for r in 0..n {
                    fd_h[(r, i)] = (gp[r] - gm[r]) / (2.0 * e);
                }
            }
            let dg: Vec<f64> = g.iter().zip(&fd_g).map(|(a, b)| a - b).collect();
            worst_g = worst_g.max(norm(&dg) / norm(&g).max(1.0));
            worst_h = worst_h.max((&h - &fd_h).norm() / h.norm().max(1.0));
        }
    }
    outcome(worst_g < 1e-6 && worst_h < 1e-5, format!("max rel err grad {worst_g:.2e}, hess {worst_h:.2e}"))
}

fn max_h_drift(traj: &Trajectory) -> (f64, f64) {
    let h0 = traj.samples[0].h;
    (traj.samples.iter().map(|s| (s.h - h0).abs()).fold(0.0, f64::max), h0)
}

fn non_increasing(values: impl Iterator<Item = f64>) -> (bool, f64) {
    let mut prev: Option<f64> = None;
    let mut worst = f64::NEG_INFINITY;
    for v in values {
        if let Some(p) = prev {
            worst = worst.max((v - p) / (1.0 + p.abs()));
        }
        prev = Some(v);
    }
    (worst <= 1e-9, worst)
}

fn criterion_5() -> Outcome {
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    // Constant pump, default integrator.
    let p = s2();
    let l1 = r2_closed_form(4.0, 2.0).unwrap().lambda1.unwrap();
    let init = State::new(vec![l1 + 0.3, l1 - 0.2], vec![0.1, 0.0], 0.0).unwrap();
    let constant = Schedule::constant(4.0).unwrap();
    let run = |dt: f64| {
        let opts = SbOptions { record_stride: 1, ..SbOptions::default() };
        max_h_drift(&integrate_sb_with(&p, 2.0, &constant, &init, dt, 10.0, opts).unwrap())
    };
    let (d1, h0) = run(1e-3);
    let (d2, _) = run(5e-4);
    let ratio = d1 / d2;
    if d1 > 1e-4 * (1.0 + h0.abs()) {
        problems.push(format!("drift {d1:.2e} above bound"));
    }
    if !(1.6..=2.5).contains(&ratio) {
        problems.push(format!("halving ratio {ratio:.2}"));
    }
    notes.push(format!("drift {d1:.1e}, ratio {ratio:.2}"));

    // Ramped pump: discrete-gradient integrator.
    let p3 = IsingProblem::three_spin_example();
    let ramp = Schedule::linear_saturating(0.0, 8.0, 20.0).unwrap();
    let opts = SbOptions { integrator: Integrator::DiscreteGradient, record_stride: 1, ..SbOptions::default() };
    let init3 = State::at_rest(vec![0.05, -0.02, 0.01]);
    let traj = integrate_sb_with(&p3, 10.0, &ramp, &init3, 1e-3, 30.0, opts).unwrap();
    let (ok, worst) = non_increasing(traj.samples.iter().map(|s| s.h));
    if !ok {
        problems.push(format!("ramped H rises by {worst:.2e}"));
    }
    notes.push(format!("ramped worst {worst:.1e}"));

    let x0 = vec![0.3, -0.7, 0.2];
    let cim = integrate_gradient_cim(&p3, 4.0, 0.5, &x0, 1e-3, 10.0, 1).unwrap();
    let (ok, worst) = non_increasing(cim.samples.iter().map(|s| s.h));
    if !ok {
        problems.push(format!("CIM U_c rises by {worst:.2e}"));
    }
    let dopo = integrate_dopo(&p3, 6.0, &x0, &[0.2, 0.1, -0.4], 1e-3, 10.0, 1).unwrap();
    let (ok2, worst2) = non_increasing(dopo.samples.iter().map(|s| s.h));
    if !ok2 {
        problems.push(format!("DOPO U_d rises by {worst2:.2e}"));
    }
    outcome(problems.is_empty(), if problems.is_empty() { notes.join(", ") } else { problems.join("; ") })
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_flow, mut worst_newton, mut converged) = (0.0_f64, 0.0_f64, 0);
    for k in 0..20u64 {
        let spec = InstanceSpec { n: 3 + k as usize % 6, distribution: Distribution::Gaussian, density: 1.0, seed: 600 + k };
        let xi = random_instance(&spec).unwrap();
        let n = xi.n();
        let p = xi.largest_eigenvalue() + 1.5;
        let mut draw = |a: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(-a..a)).collect() };
        let (c0, s0) = (draw(0.1), draw(0.1));
        let traj = integrate_dopo(&xi, p, &c0, &s0, 1e-2, 30.0, 1000).unwrap();
        let s_end = &traj.samples.last().unwrap().y;
        worst_flow = worst_flow.max(s_end.iter().map(|v| v.abs()).fold(0.0, f64::max));
        for _ in 0..50 {
            let scale = (p + 1.0).sqrt() * 2.0;
            let (c, s) = (draw(scale), draw(scale));
            if let Some((_, s_star)) = newton_dopo(&xi, p, &c, &s, 1e-12) {
                converged += 1;
                worst_newton = worst_newton.max(norm(&s_star));
            }
        }
    }
    outcome(
        worst_flow <= 1e-6 && worst_newton <= 1e-8,
        format!("flow |s|inf {worst_flow:.1e}; {converged}/1000 Newton runs converged, max |s| {worst_newton:.1e}"),
    )
}

/// Counts runs where capture, once fired, is later lost or the sign vector changes.
fn capture_violations(problem: &IsingProblem, beta: f64, runs: u64) -> (usize, usize) {
    let cfg = SolveConfig { beta, stop_on_capture: false, ..SolveConfig::default() };
    let plan = plan_solve(problem, &cfg).unwrap();
    let (mut violations, mut captured) = (0, 0);
    for seed in 0..runs {
        let out = solve_planned(problem, &SolveConfig { seed, ..cfg.clone() }, &plan).unwrap();
        let Some(first) = out.checks.iter().position(|c| c.in_capture) else { continue };
        captured += 1;
        let signs = &out.checks[first].signs;
        if out.checks[first..].iter().any(|c| !c.in_capture || &c.signs != signs) {
            violations += 1;
        }
    }
    (violations, captured)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (v2, c2) = capture_violations(&s2(), 2.0, 200);
    let (v3, c3) = capture_violations(&IsingProblem::three_spin_example(), 10.0, 100);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("n=2: {v2} violations in {c2}/200 captured; S3: {v3} in {c3}/100; {secs:.1}s");
    outcome(v2 == 0 && v3 == 0 && secs < 60.0, detail)
}

fn criterion_8() -> Outcome {
    let (alpha, beta) = (4.0, 2.0);
    let p = s2();
    let summary = find_critical_points(&params(p.clone(), alpha, beta)).unwrap();
    let u_s = summary.u_s.unwrap();
    let minima: Vec<Vec<f64>> = summary.minima().iter().map(|c| c.x.clone()).collect();
    let sch = Schedule::constant(alpha).unwrap();
    let opts = SbOptions { record_stride: 10, ..SbOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut low_transits, mut low_runs) = (0, 0);
    while low_runs < 100 {
        let m = &minima[rng.random_range(0..minima.len())];
        let x: Vec<f64> = m.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let init = State::new(x, y, 0.0).unwrap();
        if hamiltonian_sb(&p, beta, alpha, &init).unwrap() >= u_s {
            continue;
        }
        low_runs += 1;
        let traj = integrate_sb_with(&p, beta, &sch, &init, 1e-3, 20.0, opts).unwrap();
        if classify_trajectory(&traj, &summary, None).unwrap().kind == TransitKind::Transit {
            low_transits += 1;
        }
    }

    // Through the neck: integrate both ways from a point near the saddle with xi1 xi2 < 0.
    let neck = neck_linearize(beta, alpha).unwrap();
    let mut neck_transits = 0;
    let mut built = 0;
    for k in 0..10 {
        let e = 1e-3 * (1.0 + k as f64);
        let coords = NeckCoords { xi1: -e, xi2: e, eta_re: e, eta_im: 0.5 * e };
        let (x, y) = neck.compose(coords);
        let fwd_init = State::new(x.to_vec(), y.to_vec(), 0.0).unwrap();
        if hamiltonian_sb(&p, beta, alpha, &fwd_init).unwrap() <= u_s {
            continue;
        }
        built += 1;
        let fwd = integrate_sb_with(&p, beta, &sch, &fwd_init, 1e-3, 10.0, opts).unwrap();
        let bwd = integrate_sb_with(&p, beta, &sch, &fwd_init.negated_momentum(), 1e-3, 10.0, opts).unwrap();
        let mut samples: Vec<_> = bwd
            .samples
            .iter()
            .rev()
            .map(|s| {
                let mut s = s.clone();
                s.t = -s.t;
                s.y.iter_mut().for_each(|v| *v = -*v);
                s
            })
            .collect();
        samples.extend(fwd.samples.iter().skip(1).cloned());
        let through = Trajectory { samples, ..fwd };
        if classify_trajectory(&through, &summary, None).unwrap().kind == TransitKind::Transit {
            neck_transits += 1;
        }
    }
    outcome(
        low_transits == 0 && built == 10 && neck_transits == 10,
        format!("H<U_s: {low_transits}/100 transits; neck: {neck_transits}/{built} transits (10 required)"),
    )
}

/// Side of the neck (+1/-1) where the run leaves `|q| < bound`, or 0 if it never does.
fn exit_side(problem: &IsingProblem, neck: &isingflow::NeckAnalysis, init: &State, bound: f64) -> i8 {
    let sch = Schedule::constant(neck.alpha).unwrap();
    let opts = SbOptions { integrator: Integrator::RK4, record_stride: 1, ..SbOptions::default() };
    let traj = integrate_sb_with(problem, neck.beta, &sch, init, 2e-3, 8.0, opts).unwrap();
    for s in &traj.samples {
        let q = neck.hyperbolic_coordinate([s.x[0], s.x[1]]);
        if q.abs() > bound {
            return if q > 0.0 { 1 } else { -1 };
        }
    }
    0
}

fn criterion_9() -> Outcome {
    let (alpha, beta) = (4.0, 2.0);
    let neck = neck_linearize(beta, alpha).unwrap();
    let p = s2();
    let residual = neck.eigen_residual();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut agree, mut total) = (0, 0);
    while total < 200 {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let c = NeckCoords { xi1: raw[0], xi2: raw[1], eta_re: raw[2], eta_im: raw[3] };
        let (x, y) = neck.compose(c);
        let dz = [x[0] - neck.saddle[0], x[1] - neck.saddle[1], y[0], y[1]];
        let scale = rng.random_range(1e-5..1e-3) / norm(&dz);
        let c = NeckCoords { xi1: c.xi1 * scale, xi2: c.xi2 * scale, eta_re: c.eta_re * scale, eta_im: c.eta_im * scale };
        if c.xi1.abs().min(c.xi2.abs()) < 1e-6 {
            continue;
        }
        total += 1;
        let predicted_cross = classify_neck_orbit(c.xi1, c.xi2) == NeckOrbit::SaddleTransit;
        let (x, y) = neck.compose(c);
        let init = State::new(x.to_vec(), y.to_vec(), 0.0).unwrap();
        let ahead = exit_side(&p, &neck, &init, 0.05);
        let behind = exit_side(&p, &neck, &init.negated_momentum(), 0.05);
        if ahead != 0 && behind != 0 && (ahead != behind) == predicted_cross {
            agree += 1;
        }
    }
    let rate = agree as f64 / total as f64;

    // Periodic orbit with |eta| = 1e-4 against the predicted ellipse.
    let eta = 1e-4;
    let ellipse = periodic_orbit_ellipse(&neck, eta).unwrap();
    let (x, y) = neck.compose(NeckCoords { xi1: 0.0, xi2: 0.0, eta_re: eta, eta_im: 0.0 });
    let period = 2.0 * std::f64::consts::PI / neck.mu2_im;
    let sch = Schedule::constant(alpha).unwrap();
    let opts = SbOptions { integrator: Integrator::RK4, record_stride: 1, ..SbOptions::default() };
    let init = State::new(x.to_vec(), y.to_vec(), 0.0).unwrap();
    let traj = integrate_sb_with(&p, beta, &sch, &init, period / 2000.0, period, opts).unwrap();
    let (a_semi, b_semi) = (ellipse.major, ellipse.minor);
    let mut worst = 0.0_f64;
    let mut area = 0.0;
    let pts: Vec<[f64; 2]> =
        traj.samples.iter().map(|s| [s.x[0] - neck.saddle[0], s.x[1] - neck.saddle[1]]).collect();
    for (k, d) in pts.iter().enumerate() {
        let r = ((d[0] / a_semi).powi(2) + (d[1] / b_semi).powi(2)).sqrt();
        worst = worst.max((r - 1.0).abs() * b_semi);
        let e = pts[(k + 1) % pts.len()];
        area += 0.5 * (d[0] * e[1] - e[0] * d[1]);
    }
    let clockwise = area < -1e-3 * a_semi * b_semi;
    let ellipse_ok = worst <= 1e-6 && clockwise && ellipse.orientation == Orientation::Clockwise;

    let pass = residual <= 1e-10 && rate >= 0.95 && ellipse_ok;
    outcome(
        pass,
        format!(
            "residual {residual:.1e}; cross/bounce agreement {agree}/{total}; periodic orbit max distance from ellipse {worst:.2e} (need 1e-6), signed area {area:.2e}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let (alpha, eps) = (1e3, 0.1);
    let mut problems = Vec::new();
    for sign in [CubicSign::Plus, CubicSign::Minus] {
        let r = cubic_roots(alpha, eps, sign).unwrap();
        for x in r {
            let res = cubic_residual(alpha, eps, sign, x).abs();
            if res > 1e-12 {
                problems.push(format!("{sign:?}: residual {res:.1e}"));
            }
        }
        let checks = [((r[0] + alpha).abs(), eps / 2.0), ((r[2] - alpha).abs(), eps / 2.0), (r[1].abs(), eps)];
        for (got, want) in checks {
            if (got - want).abs() > 1e-3 {
                problems.push(format!("{sign:?}: {got} vs {want}"));
            }
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { "residuals and offsets within tolerance".into() } else { problems.join("; ") })
}

fn run_cli(args: &[&str], dir: &std::path::Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_isingflow")).args(args).current_dir(dir).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p2.json"), r#"{"n": 2, "coupling": [[0, 1], [1, 0]]}"#).unwrap();
    std::fs::write(dir.path().join("p3.json"), r#"{"n": 3, "coupling": [[0, 1, -2], [1, 0, 3], [-2, 3, 0]]}"#).unwrap();
    let invocations: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["solve", "--problem", "p3.json", "--beta", "10", "--seed", "42", "--json", "--trace", "t.csv"], vec!["t.csv"]),
        (vec!["trace", "--problem", "p2.json", "--beta", "2", "--seed", "7", "--out", "tr.csv"], vec!["tr.csv"]),
        (vec!["capture", "--problem", "p2.json", "--beta", "2", "--trace", "tr.csv"], vec![]),
        (
            vec![
                "landscape", "--problem", "p2.json", "--beta", "2", "--alpha", "5", "--grid-csv", "g.csv", "--overlay-csv",
                "o.csv", "--hill-level", "-60", "--hill-csv", "h.csv",
            ],
            vec!["g.csv", "o.csv", "h.csv"],
        ),
        (vec!["bench", "--n", "6", "--count", "4", "--runs", "2", "--seed", "3", "--csv", "b.csv"], vec!["b.csv"]),
        (vec!["neck", "--beta", "2", "--alpha", "4"], vec![]),
        (vec!["bifurcate", "--beta", "2", "--alpha", "5"], vec![]),
        (vec!["oracle", "--problem", "p3.json"], vec![]),
    ];
    let mut problems = Vec::new();
    for (args, files) in &invocations {
        let first = run_cli(args, dir.path());
        let first_files: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap_or_default()).collect();
        let second = run_cli(args, dir.path());
        let second_files: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap_or_default()).collect();
        if first != second || first_files != second_files {
            problems.push(format!("'{}' differs between runs", args[0]));
        }
        if first.1.is_empty() && files.is_empty() {
            problems.push(format!("'{}' printed nothing (exit {})", args[0], first.0));
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("{} invocations byte-identical", invocations.len()) } else { problems.join("; ") })
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let specs: Vec<InstanceSpec> = (0..100)
        .map(|k| InstanceSpec { n: 12, distribution: Distribution::SpinGlassPM1, density: 1.0, seed: 12_000 + k })
        .collect();
    let cfg = CampaignConfig { alpha_policy: AlphaPolicy::Heuristic, master_seed: 12, ..CampaignConfig::default() };
    let a = run_campaign(&specs, &cfg, 1).unwrap();
    let b = run_campaign(&specs, &cfg, 1).unwrap();
    let reproducible = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
    let bounded = a.runs.iter().all(|r| r.solver_energy >= r.oracle_min);
    let ct = a.capture_time.as_ref().map_or("none".to_string(), |p| format!("p10 {:.1} p50 {:.1} p90 {:.1}", p.p10, p.p50, p.p90));
    outcome(
        reproducible && bounded,
        format!(
            "success {:.2}, capture {:.2}, time-to-capture {ct}; reproducible {reproducible}, E >= oracle {bounded}; {:.1}s",
            a.success_rate,
            a.capture_rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let o = f();
        println!("criterion {id:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
