//! Taylor remainders of `G(x-y, t-s)` in their sum and integral forms.
use fracheat::expansion::{evaluate_remainders, ExpansionSpec};
use fracheat::kernel::Kernel;

fn main() -> fracheat::Result<()> {
    for theta in [1.0, 1.5] {
        let k = Kernel::new(theta, 1)?;
        for kk in [1.0, 2.0] {
            let spec = ExpansionSpec::new(kk, theta, 1)?;
            let r = evaluate_remainders(&k, &spec, 0.7, 0.3, 2.0, 0.5, 1.0, 0)?;
            println!(
                "theta {theta} K {kk}: S {:.6e} / {:.6e}, T {:.6e} / {:.6e}, R {:.6e} / {:.6e}, gap {:.1e}",
                r.s_taylor,
                r.s_integral,
                r.t_taylor,
                r.t_integral,
                r.r_direct,
                r.r_composed,
                r.disagreement()
            );
        }
    }
    Ok(())
}
