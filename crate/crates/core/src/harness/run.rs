//! Running rate studies, with solver runs shared between experiments that
//! differ only in the profile or norm they measure.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ForcingSpec, PointForcing, ProblemKind, ProfileKind};
use super::fit::{fit_rate, judge, Verdict};
use super::report::{RateReport, RateRow};
use crate::error::{Error, Result};
use crate::expansion::{
    build_u_chain, build_v, coefficients_from_history, z_coefficients_from_history, Basis, UChain, VProfile,
};
use crate::field::{norm_q_ell, Field, SpaceTimeField};
use crate::kernel::Kernel;
use crate::semigroup::{LinearRun, NonlinearRun, Solver};

/// A finished solver run and whatever profiles were built alongside it.
pub enum RunData {
    Linear(LinearRun),
    Chain(UChain),
    Mass(NonlinearRun, VProfile),
}

type Slot = Arc<OnceLock<std::result::Result<Arc<RunData>, String>>>;

/// Shared state of a batch: kernels per `theta` and finished runs.
#[derive(Default)]
pub struct Harness {
    kernels: Mutex<HashMap<(u64, usize), Arc<Kernel>>>,
    runs: Mutex<HashMap<String, Slot>>,
}

/// Everything a run depends on, serialized as its cache key.
#[derive(Serialize)]
struct RunKey<'a> {
    problem: ProblemKind,
    theta: f64,
    dim: usize,
    datum: &'a super::config::Datum,
    forcing: &'a ForcingSpec,
    nonlinear: &'a Option<crate::semigroup::NonlinearSpec>,
    solver: crate::semigroup::SolverConfig,
    times: Vec<f64>,
    /// Chain runs build their profiles in lockstep, so they also depend on `K`.
    chain_k: Option<f64>,
}

impl Harness {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kernel(&self, theta: f64, dim: usize) -> Result<Arc<Kernel>> {
        let key = (theta.to_bits(), dim);
        if let Some(k) = self.kernels.lock().unwrap().get(&key) {
            return Ok(k.clone());
        }
        let k = Arc::new(Kernel::new(theta, dim)?);
        Ok(self.kernels.lock().unwrap().entry(key).or_insert(k).clone())
    }

    pub fn solver(&self, cfg: &ExperimentConfig) -> Result<Solver> {
        Solver::with_kernel(self.kernel(cfg.theta, cfg.dim)?, cfg.solver_config())
    }

    /// The solver run behind `cfg`, computed once per batch.
    pub fn run_for(&self, cfg: &ExperimentConfig) -> Result<Arc<RunData>> {
        let times = cfg.ladder.times()?;
        let key = serde_json::to_string(&RunKey {
            problem: cfg.problem,
            theta: cfg.theta,
            dim: cfg.dim,
            datum: &cfg.datum,
            forcing: &cfg.forcing,
            nonlinear: &cfg.nonlinear,
            solver: cfg.solver_config(),
            times,
            chain_k: matches!(cfg.problem, ProblemKind::Nonlinear).then_some(cfg.k),
        })
        .expect("run key serializes");
        let slot = self.runs.lock().unwrap().entry(key).or_default().clone();
        slot.get_or_init(|| self.compute(cfg).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Evaluation)
    }

    fn compute(&self, cfg: &ExperimentConfig) -> Result<RunData> {
        let solver = self.solver(cfg)?;
        let times = cfg.ladder.times()?;
        let phi = cfg.datum.sample(solver.config().initial_grid()?)?;
        match cfg.problem {
            ProblemKind::Linear | ProblemKind::Convection => {
                let derivative = cfg.problem == ProblemKind::Convection;
                let run = match cfg.forcing {
                    ForcingSpec::None => solver.solve_linear(&phi, None, &times)?,
                    spec => {
                        let f = PointForcing::new(spec, derivative, solver.kernel())?;
                        solver.solve_linear(&phi, Some(&f), &times)?
                    }
                };
                Ok(RunData::Linear(run))
            }
            ProblemKind::Nonlinear => {
                let nl = cfg.nonlinear.expect("validated");
                // learn the step from a plain run, then build the chain on it
                let plain = solver.solve_nonlinear(&phi, &nl, &times)?;
                let mut basis = Basis::new(solver.kernel().clone());
                let chain = build_u_chain(&solver, &mut basis, &phi, &nl, &cfg.spec()?, 1, &times, plain.delta)?;
                Ok(RunData::Chain(chain))
            }
            ProblemKind::MassProfile => {
                let nl = cfg.nonlinear.expect("validated");
                let run = solver.solve_nonlinear(&phi, &nl, &times)?;
                let mut basis = Basis::new(solver.kernel().clone());
                let v = build_v(&solver, &mut basis, &run, &cfg.spec()?)?;
                Ok(RunData::Mass(run, v))
            }
        }
    }

    /// `(t, |||u(t) - profile(t)|||_{q,ell})` over the ladder.
    pub fn errors(&self, cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
        let data = self.run_for(cfg)?;
        let spec = cfg.spec()?;
        let norm = |u: &Field, p: &Field| -> Result<f64> { Ok(norm_q_ell(&u.sub(p)?, cfg.q, cfg.ell)) };
        let pair = |u: &SpaceTimeField, p: &SpaceTimeField| -> Result<Vec<(f64, f64)>> {
            u.times
                .iter()
                .zip(u.slices.iter().zip(&p.slices))
                .map(|(t, (a, b))| Ok((*t, norm(a, b)?)))
                .collect()
        };
        match (&*data, cfg.profile) {
            (RunData::Linear(run), profile) => {
                let mut basis = Basis::new(self.kernel(cfg.theta, cfg.dim)?);
                let traj = &run.trajectory;
                let mut out = Vec::with_capacity(traj.len());
                for (t, u) in traj.times.iter().zip(&traj.slices) {
                    let c = match (cfg.problem, profile) {
                        (ProblemKind::Linear, ProfileKind::Full) => {
                            coefficients_from_history(&spec, *t, &run.phi_moments, &run.history)?
                        }
                        (ProblemKind::Linear, ProfileKind::Truncated { max_alpha }) => {
                            coefficients_from_history(&spec, *t, &run.phi_moments, &run.history)?
                                .filtered(|c| c.alpha.order() <= max_alpha)
                        }
                        (ProblemKind::Convection, ProfileKind::Full | ProfileKind::Stripped) => {
                            let stripped = profile == ProfileKind::Stripped;
                            z_coefficients_from_history(&spec, *t, &run.phi_moments, &run.history, stripped)?
                        }
                        (p, k) => {
                            return Err(Error::InvalidParameter(format!("profile {k:?} does not apply to {p:?}")))
                        }
                    };
                    let w = basis.field(&c, u.grid, *t)?;
                    out.push((*t, norm(u, &w)?));
                }
                Ok(out)
            }
            (RunData::Chain(chain), ProfileKind::Chain { n }) => {
                let p = chain.profiles.get(n).ok_or_else(|| {
                    Error::InvalidParameter(format!("chain was built to level {}", chain.profiles.len() - 1))
                })?;
                pair(&chain.u, p)
            }
            (RunData::Chain(chain), ProfileKind::Star) => match &chain.u_star {
                Some(s) => pair(&chain.u, s),
                None => Err(Error::TailExtrapolation(chain.star_error.clone().unwrap_or_default())),
            },
            (RunData::Mass(run, v), ProfileKind::Mass) => pair(&run.trajectory, &v.v),
            (_, k) => Err(Error::InvalidParameter(format!("profile {k:?} does not apply to {:?}", cfg.problem))),
        }
    }

    /// Validate, run, fit and judge one experiment. Solver failures after
    /// validation come back as an aborted report.
    pub fn run_experiment(&self, cfg: &ExperimentConfig) -> Result<RateReport> {
        cfg.validate()?;
        let predicted = cfg.predicted()?;
        let (pairs, aborted) = match self.errors(cfg) {
            Ok(p) => (p, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let rows: Vec<RateRow> = pairs
            .iter()
            .map(|&(t, e)| RateRow { t, error: e, scaled_error: t.powf(predicted) * e })
            .collect();
        let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_error).collect();
        let (fit, verdict, margin) = if aborted.is_some() || rows.len() < 2 {
            (None, Verdict::Fail, -1.0)
        } else {
            let fit = fit_rate(&times, &errors)?;
            let (v, m) = judge(&cfg.criterion, &fit, predicted, &times, &scaled);
            (Some(fit), v, m)
        };
        Ok(RateReport {
            config: cfg.clone(),
            rows,
            predicted_exponent: predicted,
            fit,
            criterion: cfg.criterion,
            verdict,
            margin,
            aborted,
        })
    }

    /// Run a batch on `jobs` threads (all cores when `None`); reports keep the
    /// order of `configs`.
    pub fn run_batch(&self, configs: &[ExperimentConfig], jobs: Option<usize>) -> Result<Vec<RateReport>> {
        for c in configs {
            c.validate()?;
        }
        let go = || configs.par_iter().map(|c| self.run_experiment(c)).collect::<Result<Vec<_>>>();
        match jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .install(go),
            None => go(),
        }
    }
}

/// Run one experiment on a fresh harness.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    Harness::new().run_experiment(cfg)
}
