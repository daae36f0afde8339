use std::sync::Arc;

use fracheat::expansion::{
    build_u_chain, build_v, build_w, build_z, evaluate_remainders, z_coefficients_from_history, Basis, ExpansionSpec,
};
use fracheat::field::{Field, Grid1D};
use fracheat::harness::suites::moment_decay_slope;
use fracheat::kernel::Kernel;
use fracheat::semigroup::{FnForcing, NonlinearSpec, Solver, SolverConfig};

fn setup(theta: f64) -> (Solver, SolverConfig, Basis) {
    let cfg = SolverConfig::for_theta(theta);
    let s = Solver::new(cfg.clone()).unwrap();
    let b = Basis::new(Arc::clone(s.kernel()));
    (s, cfg, b)
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

#[test]
fn error_of_w_is_the_remainder_integral() {
    // u - w = int R(x, y, t+1, 1) phi(y) dy for phi = indicator of [0, 1]
    let theta = 1.5;
    let (s, cfg, mut basis) = setup(theta);
    let k = Kernel::new(theta, 1).unwrap();
    let spec = ExpansionSpec::new(1.0, theta, 1).unwrap();
    let phi = Field::indicator(cfg.initial_grid().unwrap(), 0.0, 1.0);
    let t = 3.0;
    let u = s.apply_semigroup(&phi, t).unwrap();
    let pts = Grid1D::covering(6.0, 1.5).unwrap();
    let (w, _) = build_w(&mut basis, &phi, None, &spec, t, pts).unwrap();
    for (x, wx) in pts.points().zip(&w.values) {
        let r = simpson(0.0, 1.0, 40, |y| evaluate_remainders(&k, &spec, x, y, t + 1.0, 1.0, 0.0, 0).unwrap().r());
        let lhs = u.eval(x) - wx;
        assert!((lhs - r).abs() < 1e-4, "x = {x}: {lhs} vs {r}");
    }
}

#[test]
fn unforced_z_is_w() {
    let (_, cfg, mut basis) = setup(1.5);
    let spec = ExpansionSpec::new(2.0, 1.5, 1).unwrap();
    let phi = Field::from_fn(cfg.initial_grid().unwrap(), |x| (-(x - 0.5) * (x - 0.5)).exp()).unwrap();
    let g = Grid1D::covering(10.0, 0.5).unwrap();
    let (w, _) = build_w(&mut basis, &phi, None, &spec, 4.0, g).unwrap();
    let (z, _) = build_z(&mut basis, &phi, None, &spec, 4.0, g).unwrap();
    assert_eq!(w, z);
}

#[test]
fn zero_coupling_collapses_the_profiles() {
    let (s, cfg, mut basis) = setup(1.0);
    let spec = ExpansionSpec::new(1.0, 1.0, 1).unwrap();
    let phi = Field::from_fn(cfg.initial_grid().unwrap(), |x| (-x * x).exp()).unwrap();
    let nl = NonlinearSpec::new(0.0, 3.0);
    let times = [2.0, 8.0];

    let chain = build_u_chain(&s, &mut basis, &phi, &nl, &spec, 2, &times, cfg.delta).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let (w, _) = build_w(&mut basis, &phi, None, &spec, t, chain.u.slices[i].grid).unwrap();
        for p in &chain.profiles {
            assert!(p.slices[i].sub(&w).unwrap().sup_norm() < 1e-10);
        }
    }

    let run = s.solve_nonlinear(&phi, &nl, &times).unwrap();
    let v = build_v(&s, &mut basis, &run, &spec).unwrap();
    assert!((v.m_star - run.phi_moments[0]).abs() < 1e-12);
    for (i, &t) in times.iter().enumerate() {
        let (w, _) = build_w(&mut basis, &phi, None, &spec, t, v.v.slices[i].grid).unwrap();
        assert!(v.v.slices[i].sub(&w).unwrap().sup_norm() < 1e-10);
    }
}

#[test]
fn source_moments_decay_at_the_predicted_rate() {
    // |M_alpha(F(u(t)))| <= C (t+1)^{-A_p + alpha/theta}
    let (s, cfg, _) = setup(1.0);
    let phi = Field::from_fn(cfg.initial_grid().unwrap(), |x| (-x * x).exp()).unwrap();
    let nl = NonlinearSpec::new(-1.0, 3.0);
    let run = s.solve_nonlinear(&phi, &nl, &[100.0, 1000.0]).unwrap();
    let a_p = nl.a_p(1.0, 1);
    for alpha in [0, 2] {
        let slope = moment_decay_slope(&run.history, alpha, 1.0).unwrap().slope().unwrap();
        assert!(slope <= -a_p + alpha as f64 + 0.2, "alpha {alpha}: {slope}");
    }
}

#[test]
fn convection_coefficients_follow_the_forcing_moments() {
    // S = d_x f with f = e^{-s} e^{-x^2}: the g_1 coefficient is -int M_0(f) = -sqrt(pi)(1 - e^{-t})
    let (s, cfg, _) = setup(1.5);
    let spec = ExpansionSpec::new(1.0, 1.5, 1).unwrap();
    let src = FnForcing(|x: f64, s: f64| -2.0 * x * (-s).exp() * (-x * x).exp());
    let times = [2.0, 5.0];
    let run = s.solve_linear(&Field::zeros(cfg.initial_grid().unwrap()), Some(&src), &times).unwrap();
    for t in times {
        let c = z_coefficients_from_history(&spec, t, &run.phi_moments, &run.history, false).unwrap();
        let exact = -std::f64::consts::PI.sqrt() * (1.0 - (-t).exp());
        // the history integral carries the second-order time-step error
        assert!((c.get(1, 0).unwrap() - exact).abs() < 1e-4, "t = {t}: {:?}", c.get(1, 0));
        assert!(c.get(2, 0).unwrap().abs() < 1e-10);
        assert_eq!(c.get(0, 0), Some(0.0));
    }
}
