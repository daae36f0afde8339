//! Boundedness checks: smoothing ratios of the semigroup, the interpolation
//! ratio of a decaying forcing, and the comparison and mass ledgers of a
//! nonlinear run.
use fracheat::field::{Field, Grid1D, SpaceTimeField};
use fracheat::harness::suites::*;
use fracheat::kernel::Kernel;
use fracheat::semigroup::{NonlinearSpec, Solver, SolverConfig};

fn main() -> fracheat::Result<()> {
    let times = [0.1, 1.0, 10.0, 100.0];
    for theta in [1.0, 1.5] {
        let k = Kernel::new(theta, 1)?;
        let r = derivative_ratios(&k, &|x: f64| (-x * x).exp(), 6.0, &derivative_lattice(theta, 1), &times)?;
        let worst = r.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
        println!("theta {theta}: {} ratios, largest {:.3} at t = {} {:?}", r.len(), worst.ratio, worst.t, worst.index);
        let g = Grid1D::covering(40.0, 0.02)?;
        let slices = times.iter().map(|s| Field::from_fn(g, |x| (-s).exp() * (-x * x).exp())).collect::<Result<_, _>>()?;
        let f = SpaceTimeField::new(times.to_vec(), slices)?;
        let r = interpolation_ratio(&f, 2.0, 1.0, theta, 1, &[1.0], &[0.0, 1.0, 2.0])?;
        println!("theta {theta}: interpolation ratio {r:.3}");
    }
    let cfg = SolverConfig::for_theta(1.0);
    let solver = Solver::new(cfg.clone())?;
    let phi = Field::from_fn(cfg.initial_grid()?, |x| (-x * x).exp())?;
    let run = solver.solve_nonlinear(&phi, &NonlinearSpec::new(-1.0, 3.0), &[1.0, 10.0, 100.0])?;
    println!("comparison excess {:.2e}", comparison_excess(&solver, &run)?);
    for row in mass_ledger(&run) {
        println!("t {:>5}: mass change {:.6e}, source {:.6e}", row.t, row.change, row.source);
    }
    let (scaled, growth) = scaled_norm_trend(&run.trajectory, f64::INFINITY, 0.0, 1.0, 1);
    println!("scaled sup norms {scaled:.4?}, growth {growth:.4}");
    Ok(())
}
