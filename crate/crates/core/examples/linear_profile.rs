//! Free evolution of an off-centre datum and its distance to the moment
//! profile `w`, with and without the first-moment term.
use std::sync::Arc;

use fracheat::expansion::{coefficients_from_history, Basis, ExpansionSpec};
use fracheat::field::{norm_q_ell, Field};
use fracheat::semigroup::{Solver, SolverConfig};

fn main() -> fracheat::Result<()> {
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone())?;
    let phi = Field::from_fn(cfg.initial_grid()?, |x| if (1.0..=3.0).contains(&x) { 1.0 } else { 0.0 })?;
    let times = [10.0, 31.6, 100.0, 316.0, 1000.0];
    let run = solver.solve_linear(&phi, None, &times)?;
    let spec = ExpansionSpec::new(1.0, 1.0, 1)?;
    let mut basis = Basis::new(Arc::clone(solver.kernel()));
    println!("{:>8} {:>12} {:>12}", "t", "|u-w|_1", "|u-w_0|_1");
    for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
        let c = coefficients_from_history(&spec, *t, &run.phi_moments, &run.history)?;
        let full = basis.field(&c, u.grid, *t)?;
        let mass = basis.field(&c.filtered(|c| c.alpha.order() == 0), u.grid, *t)?;
        println!(
            "{t:>8} {:>12.4e} {:>12.4e}",
            norm_q_ell(&u.sub(&full)?, 1.0, 0.0),
            norm_q_ell(&u.sub(&mass)?, 1.0, 0.0)
        );
    }
    Ok(())
}
