//! Convection-type forcing `d_x f`: the profile `z` against the one that
//! drops the gradient terms.
use fracheat::harness::{preset, Harness};

fn main() -> fracheat::Result<()> {
    let h = Harness::new();
    for name in ["convection-full", "convection-stripped"] {
        let r = h.run_experiment(&preset(name)?.remove(0))?;
        println!("{}", r.summary());
        for row in &r.rows {
            println!("  t {:>8.1} error {:.4e}", row.t, row.error);
        }
    }
    Ok(())
}
