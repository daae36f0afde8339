//! Residual mass `M_*` of an absorbing problem and the profile around `M_* G`.
use std::sync::Arc;

use fracheat::expansion::{build_v, Basis, ExpansionSpec};
use fracheat::field::{norm_q_ell, Field};
use fracheat::semigroup::{NonlinearSpec, Solver, SolverConfig};

fn main() -> fracheat::Result<()> {
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone())?;
    let phi = Field::from_fn(cfg.initial_grid()?, |x| (-x * x).exp())?;
    let nl = NonlinearSpec::new(-1.0, 3.0);
    let run = solver.solve_nonlinear(&phi, &nl, &[10.0, 100.0, 1000.0])?;
    let mut basis = Basis::new(Arc::clone(solver.kernel()));
    let v = build_v(&solver, &mut basis, &run, &ExpansionSpec::new(2.0, 1.0, 1)?)?;
    println!("M(phi) = {:.8}, M_* = {:.8} (tail {:.2e})", run.phi_moments[0], v.m_star, v.m_star_fit.tail);
    for ((t, u), p) in run.trajectory.times.iter().zip(&run.trajectory.slices).zip(&v.v.slices) {
        println!("t {t:>6}: |u - v|_1 = {:.4e}", norm_q_ell(&u.sub(p)?, 1.0, 0.0));
    }
    Ok(())
}
