use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracheat::expansion::{coefficients_from_history, z_coefficients_from_history, ExpansionCoefficients};
use fracheat::harness::{
    emit_batch, preset, preset_names, read_batch, Criterion, ExperimentConfig, Harness, ProblemKind, ProfileKind,
    RunData,
};
use fracheat::kernel::{Kernel, CACHE_ENV};
use fracheat::{Error, Result};

/// Fractional heat kernels, solvers and asymptotic-profile rate studies.
#[derive(Parser)]
#[command(name = "fracheat", version, after_help = "Kernel profiles are cached in $FRACHEAT_CACHE_DIR when it is set.")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (one JSON object or a list).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Named experiment or batch (see `verify --list`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Worker threads for a batch.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Slope tolerance, replacing the one in each config.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate one kernel profile and write it as CSV.
    Kernel {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        alpha: u32,
        #[arg(long, default_value_t = 0)]
        m: u32,
    },
    /// Run the solver of each experiment and store its trajectory.
    Solve,
    /// Write the profile coefficients of each experiment at its sample times.
    Expand,
    /// Full rate study: reports, CSVs and a batch index.
    Verify {
        /// Print the preset names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Re-emit CSVs and the index from the reports stored in `--out`.
    Report,
}

fn configs(c: &Common) -> Result<Vec<ExperimentConfig>> {
    let mut list = match (&c.config, &c.preset) {
        (Some(path), None) => ExperimentConfig::from_json_file(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => preset("acceptance")?,
        (Some(_), Some(_)) => return Err(Error::InvalidParameter("give --config or --preset, not both".into())),
    };
    if let Some(tol) = c.tolerance {
        for cfg in &mut list {
            cfg.criterion = match cfg.criterion {
                Criterion::Predicted { .. } => Criterion::Predicted { tolerance: tol },
                Criterion::SlopeNear { target, .. } => Criterion::SlopeNear { target, tolerance: tol },
                other => other,
            };
        }
    }
    Ok(list)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    }
    let body = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, body).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    match cli.cmd {
        Cmd::Kernel { theta, alpha, m } => {
            let k = Kernel::new(theta, 1)?;
            let p = k.profile1(alpha, m)?;
            fs::create_dir_all(&c.out).map_err(|e| Error::Io { path: c.out.clone(), source: e })?;
            let path = c.out.join(format!("kernel_theta{theta}_a{alpha}_m{m}.csv"));
            let mut s = String::from("z,value\n");
            for (i, v) in p.values.iter().enumerate() {
                s.push_str(&format!("{:e},{v:e}\n", i as f64 * p.h_z));
            }
            fs::write(&path, s).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            println!(
                "theta {theta} alpha {alpha} m {m}: {} samples to z = {}, tail exponent {}, tail mismatch {:.2e} -> {}",
                p.values.len(),
                p.z_max,
                p.tail_exponent,
                p.tail_mismatch,
                path.display()
            );
            if std::env::var_os(CACHE_ENV).is_none() {
                log::info!("{CACHE_ENV} is unset; the profile was not cached");
            }
            Ok(true)
        }
        Cmd::Solve => {
            let h = Harness::new();
            for cfg in configs(c)? {
                cfg.validate()?;
                let dir = c.out.join(&cfg.id);
                match &*h.run_for(&cfg)? {
                    RunData::Linear(r) => r.trajectory.write_dir(&dir.join("u"))?,
                    RunData::Chain(ch) => {
                        ch.u.write_dir(&dir.join("u"))?;
                        for (n, p) in ch.profiles.iter().enumerate() {
                            p.write_dir(&dir.join(format!("U{n}")))?;
                        }
                    }
                    RunData::Mass(r, v) => {
                        r.trajectory.write_dir(&dir.join("u"))?;
                        v.v.write_dir(&dir.join("v"))?;
                    }
                }
                println!("{} -> {}", cfg.id, dir.display());
            }
            Ok(true)
        }
        Cmd::Expand => {
            let h = Harness::new();
            for cfg in configs(c)? {
                cfg.validate()?;
                let spec = cfg.spec()?;
                let coeffs: Vec<ExpansionCoefficients> = match &*h.run_for(&cfg)? {
                    RunData::Linear(r) => r
                        .trajectory
                        .times
                        .iter()
                        .map(|&t| match cfg.problem {
                            ProblemKind::Convection => z_coefficients_from_history(
                                &spec,
                                t,
                                &r.phi_moments,
                                &r.history,
                                cfg.profile == ProfileKind::Stripped,
                            ),
                            _ => coefficients_from_history(&spec, t, &r.phi_moments, &r.history),
                        })
                        .collect::<Result<_>>()?,
                    RunData::Chain(ch) => ch.star_coefficients.clone().into_iter().collect(),
                    RunData::Mass(_, v) => v.coefficients.clone(),
                };
                let path = c.out.join(format!("{}_coefficients.json", cfg.id));
                write_json(&path, &coeffs)?;
                println!("{} -> {}", cfg.id, path.display());
            }
            Ok(true)
        }
        Cmd::Verify { list } => {
            if list {
                for n in preset_names() {
                    println!("{n}");
                }
                return Ok(true);
            }
            let reports = Harness::new().run_batch(&configs(c)?, c.jobs)?;
            let index = emit_batch(&reports, &c.out)?;
            for r in &reports {
                println!("{}", r.summary());
            }
            println!("index -> {}", c.out.join(fracheat::harness::INDEX_FILE).display());
            Ok(index.all_passed)
        }
        Cmd::Report => {
            let reports = read_batch(&c.out)?;
            let index = emit_batch(&reports, &c.out)?;
            for r in &reports {
                println!("{}", r.summary());
            }
            Ok(index.all_passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
