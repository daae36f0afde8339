//! Forcing by the kernel itself: `int_0^t G(t-s) G(s+1) ds = t G(t+1)`.
use fracheat::field::Field;
use fracheat::kernel::Kernel;
use fracheat::semigroup::{FnForcing, Solver, SolverConfig};

fn main() -> fracheat::Result<()> {
    for theta in [1.0, 1.5] {
        let cfg = SolverConfig::for_theta(theta);
        let solver = Solver::new(cfg.clone())?;
        let k = Kernel::new(theta, 1)?;
        let f = FnForcing(|x: f64, s: f64| k.g(x, s + 1.0).unwrap());
        let run = solver.solve_linear(&Field::zeros(cfg.initial_grid()?), Some(&f), &[1.0, 4.0, 16.0])?;
        for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
            let err = u
                .grid
                .points()
                .zip(&u.values)
                .map(|(x, v)| (v - t * k.g(x, t + 1.0).unwrap()).abs())
                .fold(0.0, f64::max);
            println!("theta {theta} t {t:>4}: sup error {err:.2e}");
        }
    }
    Ok(())
}
