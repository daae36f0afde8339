//! Tabulated kernel against the Cauchy and Gauss closed forms, and the
//! power tail of a derivative profile.
use fracheat::kernel::Kernel;

fn main() -> fracheat::Result<()> {
    let cauchy = Kernel::new(1.0, 1)?;
    let gauss = Kernel::new(2.0, 1)?;
    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "x", "G_1", "Cauchy", "G_2", "Gauss");
    for x in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let t = 1.0;
        let c = t / (std::f64::consts::PI * (t * t + x * x));
        let g = (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
        println!("{x:>6} {:>14.6e} {c:>14.6e} {:>14.6e} {g:>14.6e}", cauchy.g(x, t)?, gauss.g(x, t)?);
    }
    let k = Kernel::new(1.5, 1)?;
    for (alpha, m) in [(0, 0), (1, 0), (0, 1)] {
        let p = k.profile1(alpha, m)?;
        println!(
            "theta 1.5 alpha {alpha} m {m}: {} samples to z = {}, tail ~ z^{}, seam mismatch {:.1e}",
            p.values.len(),
            p.z_max,
            p.tail_exponent,
            p.tail_mismatch
        );
    }
    Ok(())
}
