//! Absorbing nonlinearity `-|u|^2 u`: the first two profiles of the chain.
use std::sync::Arc;

use fracheat::expansion::{build_u_chain, Basis, ExpansionSpec};
use fracheat::field::{norm_q_ell, Field};
use fracheat::semigroup::{NonlinearSpec, Solver, SolverConfig};

fn main() -> fracheat::Result<()> {
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone())?;
    let phi = Field::from_fn(cfg.initial_grid()?, |x| (-x * x).exp())?;
    let nl = NonlinearSpec::new(-1.0, 3.0);
    let times = [10.0, 31.6, 100.0, 316.0, 1000.0];
    let plain = solver.solve_nonlinear(&phi, &nl, &times)?;
    let mut basis = Basis::new(Arc::clone(solver.kernel()));
    let spec = ExpansionSpec::new(2.0, 1.0, 1)?;
    let chain = build_u_chain(&solver, &mut basis, &phi, &nl, &spec, 1, &times, plain.delta)?;
    println!("gap condition holds: {}", chain.gap_condition);
    for (i, t) in chain.u.times.iter().enumerate() {
        let u = &chain.u.slices[i];
        let e: Vec<String> = chain
            .profiles
            .iter()
            .map(|p| format!("{:.4e}", norm_q_ell(&u.sub(&p.slices[i]).unwrap(), 1.0, 0.0)))
            .collect();
        println!("t {t:>8}: |u-U_n|_1 for n = 0, 1: {}", e.join(" "));
    }
    if let Some(e) = &chain.star_error {
        println!("U_* unavailable: {e}");
    }
    Ok(())
}
