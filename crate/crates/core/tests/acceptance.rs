//! One pass/fail line per acceptance criterion, each measured against an
//! oracle written here rather than taken from the library. Runs without the
//! test harness so the lines are always printed.

use std::f64::consts::PI;
use std::sync::Arc;

use fracheat::expansion::{evaluate_remainders, ExpansionSpec};
use fracheat::field::{e_functional, Field, Grid1D};
use fracheat::harness::suites::{
    comparison_excess, derivative_lattice, derivative_ratios, interpolation_ratio, mass_ledger, moment_decay_slope,
    scaled_norm_trend,
};
use fracheat::harness::{preset, slope_gap, Harness, RateReport};
use fracheat::kernel::Kernel;
use fracheat::semigroup::{FnForcing, NonlinearSpec, Solver, SolverConfig};

struct Line {
    id: &'static str,
    ok: bool,
}

fn line(id: &'static str, ok: bool, text: String) -> Line {
    println!("{id} {} {text}", if ok { "PASS" } else { "FAIL" });
    Line { id, ok }
}

fn cauchy(x: f64, t: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

fn heat(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Composite Simpson on [a, b] with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `int_R g` for an even `g` with a power tail, through `x = sinh(u)`.
fn whole_line(g: impl Fn(f64) -> f64, u_max: f64) -> f64 {
    simpson(-u_max, u_max, 200_000, |u| g(u.sinh()) * u.cosh())
}

fn ac1() -> Line {
    let mut worst = 0.0f64;
    for (theta, exact) in [(1.0, cauchy as fn(f64, f64) -> f64), (2.0, heat)] {
        let k = Kernel::new(theta, 1).unwrap();
        for t in [0.5, 1.0, 4.0] {
            for i in 0..=400 {
                let x = -20.0 + 0.1 * i as f64;
                worst = worst.max((k.g(x, t).unwrap() - exact(x, t)).abs());
            }
        }
    }
    line("AC1", worst <= 1e-8, format!("kernel vs closed forms: max error {worst:.3e} (tol 1e-8)"))
}

fn ac2() -> Line {
    let mut mass_err = 0.0f64;
    let mut slope_err = 0.0f64;
    let mut law = 0.0f64;
    for theta in [0.5, 1.0, 1.5] {
        let k = Kernel::new(theta, 1).unwrap();
        let g = |x: f64, t: f64| k.g(x, t).unwrap();
        // mass: quadrature to |x| = sinh(16) plus the leading tail c x^{-1-theta}
        let c = statrs::function::gamma::gamma(1.0 + theta) * (PI * theta / 2.0).sin() / PI;
        let x_max = 16f64.sinh();
        let mass = whole_line(|x| g(x, 1.0), 16.0) + 2.0 * c * x_max.powf(-theta) / theta;
        mass_err = mass_err.max((mass - 1.0).abs());
        // tail slope on [1e3, 1e4]
        let (a, b) = (1e3, 1e4);
        let slope = (g(b, 1.0).ln() - g(a, 1.0).ln()) / (b / a).ln();
        slope_err = slope_err.max((slope + 1.0 + theta).abs());
        // G(s) * G(t) = G(s + t)
        for x in [0.0, 0.7, 3.0] {
            let conv = whole_line(|y| g(x - y, 0.5) * g(y, 1.0), 14.0);
            law = law.max((conv - g(x, 1.5)).abs());
        }
    }
    let ok = mass_err <= 1e-4 && slope_err <= 0.05 && law <= 1e-6;
    line(
        "AC2",
        ok,
        format!("mass error {mass_err:.2e} (1e-4), tail slope error {slope_err:.2e} (0.05), semigroup residual {law:.2e} (1e-6)"),
    )
}

fn ac3() -> Line {
    let mut worst = 0.0f64;
    let mut zeros = true;
    for theta in [1.0, 1.5] {
        let k = Kernel::new(theta, 1).unwrap();
        for kk in [1.0, 2.0] {
            let spec = ExpansionSpec::new(kk, theta, 1).unwrap();
            for i in 0..20 {
                // low-discrepancy sample of (x, y, t, s)
                let f = |a: f64| ((i as f64 + 1.0) * a).fract();
                let x = -4.0 + 8.0 * f(0.618_033_988_7);
                let y = -2.0 + 4.0 * f(0.414_213_562_4);
                let t = 0.5 + 4.0 * f(0.732_050_807_6);
                let s = t * 0.9 * f(0.236_067_977_5);
                let ell = kk * f(0.302_775_637_7);
                let v = evaluate_remainders(&k, &spec, x, y, t, s, ell, (i % 2) as u32).unwrap();
                worst = worst.max(v.disagreement());
                let s0 = evaluate_remainders(&k, &spec, x, 0.0, t, s, ell, 0).unwrap();
                let t0 = evaluate_remainders(&k, &spec, x, y, t, 0.0, ell, 0).unwrap();
                zeros &= s0.s_taylor == 0.0 && s0.s_integral == 0.0;
                zeros &= t0.t_taylor == 0.0 && t0.t_integral == 0.0;
            }
        }
    }
    line(
        "AC3",
        worst <= 1e-8 && zeros,
        format!("remainder forms: max disagreement {worst:.3e} (1e-8), exact zeros {zeros}"),
    )
}

fn ac4() -> Line {
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone()).unwrap();
    let zero = Field::zeros(cfg.initial_grid().unwrap());
    let f = FnForcing(|x: f64, s: f64| cauchy(x, s + 1.0));
    let run = solver.solve_linear(&zero, Some(&f), &[1.0, 4.0, 16.0]).unwrap();
    let mut worst = 0.0f64;
    for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
        for (x, v) in u.grid.points().zip(&u.values) {
            worst = worst.max((v - t * cauchy(x, t + 1.0)).abs());
        }
    }
    line("AC4", worst <= 1e-4, format!("Duhamel of G(s+1) vs t G(t+1): sup error {worst:.3e} (1e-4)"))
}

fn find<'a>(reports: &'a [RateReport], id: &str) -> &'a RateReport {
    reports.iter().find(|r| r.config.id == id).unwrap()
}

fn slope(r: &RateReport) -> f64 {
    r.slope().unwrap_or(f64::NAN)
}

fn ac5(reports: &[RateReport]) -> Line {
    let full = find(reports, "linear-full");
    let trunc = find(reports, "linear-truncated");
    let gap = slope_gap(trunc, full).unwrap_or(f64::NAN);
    let ok = slope(full) <= -1.5 && (slope(trunc) + 1.0).abs() <= 0.15 && gap >= 0.5;
    line(
        "AC5",
        ok,
        format!("full slope {:.3} (<= -1.5), truncated slope {:.3} (-1 +- 0.15), gap {gap:.3} (>= 0.5)", slope(full), slope(trunc)),
    )
}

fn ac6(reports: &[RateReport]) -> Line {
    let ids = ["forced-q1", "forced-qinf", "forced-qinf-ell1"];
    let verdicts: Vec<bool> = ids.iter().map(|id| find(reports, id).verdict.passed()).collect();
    // E_{K,q}[f] for f = e^{-s} Gaussian: integrable iff the integral settles
    let g = Grid1D::covering(12.0, 0.01).unwrap();
    let gauss = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let mut finite = true;
    for q in [1.0, f64::INFINITY] {
        let e = |s: f64| e_functional(&gauss.scaled((-s).exp()), 1.0, q, 1.0, 1, s).unwrap();
        let a = simpson(0.0, 40.0, 4000, e);
        let b = simpson(0.0, 80.0, 8000, e);
        finite &= a.is_finite() && (b - a).abs() <= 1e-9 * a;
    }
    let last = |id: &str| {
        let r = find(reports, id);
        let n = r.rows.len();
        format!("{:.2e}->{:.2e}", r.rows[n - 5].scaled_error, r.rows[n - 1].scaled_error)
    };
    line(
        "AC6",
        verdicts.iter().all(|v| *v) && finite,
        format!(
            "scaled errors over the last decade (1,0) {} (inf,0) {} (inf,1) {}; int E finite {finite}",
            last(ids[0]),
            last(ids[1]),
            last(ids[2])
        ),
    )
}

fn ac7(reports: &[RateReport]) -> Line {
    let full = find(reports, "convection-full");
    let stripped = find(reports, "convection-stripped");
    let gap = slope_gap(stripped, full).unwrap_or(f64::NAN);
    line(
        "AC7",
        gap >= 0.3,
        format!("z slope {:.3}, stripped slope {:.3}, gap {gap:.3} (>= 0.3)", slope(full), slope(stripped)),
    )
}

fn ac8_ac10_nonlinear() -> (Line, f64) {
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone()).unwrap();
    let phi = Field::from_fn(cfg.initial_grid().unwrap(), |x| (-x * x).exp()).unwrap();
    let nl = NonlinearSpec::new(-1.0, 3.0);
    let times: Vec<f64> = (4..=12).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
    let run = solver.solve_nonlinear(&phi, &nl, &times).unwrap();
    let excess = comparison_excess(&solver, &run).unwrap();
    let ledger = mass_ledger(&run).iter().map(|r| r.relative).fold(0.0, f64::max);
    let decay = moment_decay_slope(&run.history, 0, 1.0).unwrap().slope().unwrap();
    let bound = -nl.a_p(1.0, 1) + 0.2;
    let ok = excess <= 1e-6 && ledger <= 1e-3 && decay <= bound;
    let l = line(
        "AC8",
        ok,
        format!("comparison excess {excess:.2e} (1e-6), ledger {ledger:.2e} (1e-3), M_0(F) slope {decay:.3} (<= {bound})"),
    );
    let mut growth = 0.0f64;
    for (q, ell) in [(1.0, 0.0), (2.0, 0.0), (f64::INFINITY, 0.0), (1.0, 0.5), (f64::INFINITY, 1.0)] {
        growth = growth.max(scaled_norm_trend(&run.trajectory, q, ell, 1.0, 1).1);
    }
    (l, growth)
}

fn ac9(reports: &[RateReport]) -> Line {
    let u0 = find(reports, "nonlinear-u0");
    let u1 = find(reports, "nonlinear-u1");
    let gap = slope_gap(u1, u0).unwrap_or(f64::NAN);
    line(
        "AC9",
        gap <= -0.5,
        format!("slope(u-U_1) {:.3}, slope(u-U_0) {:.3}, difference {gap:.3} (<= -0.5)", slope(u1), slope(u0)),
    )
}

fn ac10(growth: f64) -> Line {
    let times = [0.1, 0.316, 1.0, 3.16, 10.0, 31.6, 100.0];
    let mut derivative = 0.0f64;
    let mut interp = 0.0f64;
    for theta in [1.0, 1.5] {
        let k = Kernel::new(theta, 1).unwrap();
        let lattice = derivative_lattice(theta, 1);
        let gauss = |x: f64| (-x * x).exp();
        let box_ = |x: f64| if x.abs() < 1.0 { 1.0 } else if x.abs() == 1.0 { 0.5 } else { 0.0 };
        for (d, support) in [(&gauss as &dyn Fn(f64) -> f64, 6.0), (&box_, 1.5)] {
            for r in derivative_ratios(&k, d, support, &lattice, &times).unwrap() {
                derivative = derivative.max(r.ratio);
            }
        }
        let g = Grid1D::covering(40.0, 0.02).unwrap();
        let slices: Vec<Field> = times
            .iter()
            .map(|s| Field::from_fn(g, |x| (-s).exp() * (-x * x).exp()).unwrap())
            .collect();
        let f = fracheat::field::SpaceTimeField::new(times.to_vec(), slices).unwrap();
        for kk in [1.0, 2.0] {
            for q in [1.0, 2.0, f64::INFINITY] {
                let r = interpolation_ratio(&f, kk, q, theta, 1, &[1.0, 2.0, f64::INFINITY], &[0.0, 0.5, 1.0, 1.5, 2.0]);
                interp = interp.max(r.unwrap());
            }
        }
    }
    let ok = derivative <= 50.0 && interp <= 10.0 && growth <= 1.05;
    line(
        "AC10",
        ok,
        format!("derivative ratio {derivative:.3} (50), interpolation ratio {interp:.3} (10), scaled norm growth {growth:.4} (1.05)"),
    )
}

fn main() {
    let harness = Arc::new(Harness::new());
    let batch = {
        let h = harness.clone();
        std::thread::spawn(move || h.run_batch(&preset("acceptance").unwrap(), None).unwrap())
    };
    let mut lines = vec![ac1(), ac2(), ac3(), ac4()];
    let reports = batch.join().unwrap();
    lines.push(ac5(&reports));
    lines.push(ac6(&reports));
    lines.push(ac7(&reports));
    let (l8, growth) = ac8_ac10_nonlinear();
    lines.push(l8);
    lines.push(ac9(&reports));
    lines.push(ac10(growth));
    let failed: Vec<&str> = lines.iter().filter(|l| !l.ok).map(|l| l.id).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria pass", lines.len());
}
