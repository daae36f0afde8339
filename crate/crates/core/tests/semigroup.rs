use fracheat::field::{moment_with_tail, Field, Grid1D};
use fracheat::semigroup::{FnForcing, NonlinearSpec, Solver, SolverConfig};

fn solver(theta: f64) -> (Solver, SolverConfig) {
    let cfg = SolverConfig::for_theta(theta);
    (Solver::new(cfg.clone()).unwrap(), cfg)
}

fn gaussian(cfg: &SolverConfig) -> Field {
    Field::from_fn(cfg.initial_grid().unwrap(), |x| (-x * x).exp()).unwrap()
}

/// Largest difference of `a` and `b` over the points of `a` inside `radius`.
fn sup_diff(a: &Field, b: &Field, radius: f64) -> f64 {
    a.grid
        .points()
        .zip(&a.values)
        .filter(|(x, _)| x.abs() <= radius)
        .map(|(x, v)| (v - b.eval(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_data_under_heat_flow() {
    let (s, cfg) = solver(2.0);
    let u = s.apply_semigroup(&gaussian(&cfg), 1.0).unwrap();
    assert!((u.eval(0.0) - 5f64.sqrt().recip()).abs() < 1e-8, "{}", u.eval(0.0));
}

#[test]
fn short_times_return_the_datum() {
    let (s, cfg) = solver(1.5);
    let phi = gaussian(&cfg);
    assert_eq!(s.apply_semigroup(&phi, 0.0).unwrap(), phi);
    let u = s.apply_semigroup(&phi, 1e-6).unwrap();
    assert!(sup_diff(&u, &phi, 10.0) < 1e-4);
}

#[test]
fn indicator_keeps_its_mass() {
    let (s, cfg) = solver(1.0);
    let phi = Field::indicator(cfg.initial_grid().unwrap(), -1.0, 1.0);
    for t in [0.5, 3.0, 20.0] {
        // wide enough that the continued tail holds under 1% of the mass
        let out = Grid1D::new((t + 1.0) / 20.0, 6000).unwrap();
        let m = moment_with_tail(&s.apply_semigroup_on(&phi, t, out).unwrap(), 0);
        assert!((m - 2.0).abs() < 1e-4, "t = {t}: {m}");
    }
}

#[test]
fn semigroup_composes() {
    let (s, cfg) = solver(1.5);
    let phi = gaussian(&cfg);
    let mid = s.apply_semigroup_on(&phi, 0.5, Grid1D::covering(400.0, 0.025).unwrap()).unwrap();
    let out = Grid1D::covering(20.0, 0.05).unwrap();
    let twice = s.apply_semigroup_on(&mid, 1.0, out).unwrap();
    let once = s.apply_semigroup_on(&phi, 1.5, out).unwrap();
    assert!(sup_diff(&twice, &once, 20.0) < 1e-6, "{}", sup_diff(&twice, &once, 20.0));
}

#[test]
fn duhamel_of_nothing_is_zero() {
    let (s, _) = solver(1.0);
    let d = s.duhamel(&FnForcing(|_: f64, _: f64| 0.0), 2.0).unwrap();
    assert!(d.values.iter().all(|v| *v == 0.0));
}

#[test]
fn duhamel_at_short_times_is_linear() {
    let (s, _) = solver(1.0);
    let psi = |x: f64| (-x * x).exp();
    let t = 1e-3;
    let d = s.duhamel(&FnForcing(move |x: f64, _: f64| psi(x)), t).unwrap();
    let err = d.grid.points().zip(&d.values).map(|(x, v)| (v - t * psi(x)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2 * t, "{err}");
}

#[test]
fn unforced_solve_is_the_semigroup() {
    let (s, cfg) = solver(1.0);
    let phi = gaussian(&cfg);
    let run = s.solve_linear(&phi, None, &[1.0, 10.0]).unwrap();
    for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
        assert_eq!(u, &s.apply_semigroup(&phi, *t).unwrap());
    }
}

#[test]
fn solve_is_linear() {
    let (s, cfg) = solver(1.5);
    let g = cfg.initial_grid().unwrap();
    let p1 = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let p2 = Field::from_fn(g, |x| (-(x - 1.0).powi(2)).exp() * 0.5).unwrap();
    let f1 = |x: f64, s: f64| (-s).exp() * (-x * x).exp();
    let f2 = |x: f64, s: f64| (-2.0 * s).exp() * x * (-x * x).exp();
    let times = [0.5, 2.0];
    let mut fixed = cfg.clone();
    fixed.refine = false;
    let s = Solver::with_kernel(s.kernel().clone(), fixed).unwrap();
    let a = s.solve_linear(&p1, Some(&FnForcing(f1)), &times).unwrap();
    let b = s.solve_linear(&p2, Some(&FnForcing(f2)), &times).unwrap();
    let sum = s
        .solve_linear(&p1.add(&p2).unwrap(), Some(&FnForcing(|x: f64, t: f64| f1(x, t) + f2(x, t))), &times)
        .unwrap();
    for i in 0..times.len() {
        let ab = a.trajectory.slices[i].add(&b.trajectory.slices[i]).unwrap();
        let d = ab.sub(&sum.trajectory.slices[i]).unwrap().sup_norm();
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn zero_coupling_is_the_semigroup() {
    let (s, cfg) = solver(1.0);
    let phi = gaussian(&cfg);
    let run = s.solve_nonlinear(&phi, &NonlinearSpec::new(0.0, 3.0), &[1.0, 10.0]).unwrap();
    for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
        let v = s.apply_semigroup_on(&phi, *t, u.grid).unwrap();
        let d = u.sub(&v).unwrap().sup_norm();
        assert!(d < 1e-8, "t = {t}: {d}");
    }
}

#[test]
fn halving_the_step_barely_moves_the_solution() {
    let mut cfg = SolverConfig::for_theta(1.0);
    cfg.refine = false;
    let phi = gaussian(&cfg);
    let nl = NonlinearSpec::new(-1.0, 3.0);
    let coarse = Solver::new(cfg.clone()).unwrap().solve_nonlinear(&phi, &nl, &[5.0]).unwrap();
    cfg.delta /= 2.0;
    let fine = Solver::new(cfg).unwrap().solve_nonlinear(&phi, &nl, &[5.0]).unwrap();
    let (a, b) = (&coarse.trajectory.slices[0], &fine.trajectory.slices[0]);
    let d = a.sub(b).unwrap().sup_norm() / b.sup_norm();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn growing_solutions_abort() {
    let (s, cfg) = solver(1.0);
    let phi = gaussian(&cfg).scaled(5.0);
    assert!(s.solve_nonlinear(&phi, &NonlinearSpec::new(1.0, 3.0), &[10.0]).is_err());
}
