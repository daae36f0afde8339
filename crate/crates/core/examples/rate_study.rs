//! Run a named batch and write its CSVs and index, as `fracheat verify` does.
//!
//!     cargo run --release --example rate_study -- rate-linear out/
use fracheat::harness::{emit_batch, preset, Harness};

fn main() -> fracheat::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "rate-linear".into());
    let out = args.next().unwrap_or_else(|| "out".into());
    let reports = Harness::new().run_batch(&preset(&name)?, None)?;
    for r in &reports {
        println!("{}", r.summary());
    }
    let index = emit_batch(&reports, out.as_ref())?;
    println!("all passed: {}", index.all_passed);
    Ok(())
}
