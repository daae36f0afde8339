//! The semigroup `e^{-t(-Delta)^{theta/2}}`, Duhamel integrals and mild
//! solutions of the linear, convection and semilinear problems (1-D).

mod conv;
mod engine;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use conv::{conv_weights, Convolver};
pub use engine::{time_mesh, Level, SourceHistory, TRACKED};
pub(crate) use engine::{lattice_moments, Engine, SourceCtx};

use crate::error::{Error, Result};
use crate::field::{Field, Grid1D, SpaceTimeField};
use crate::kernel::Kernel;

/// Numerical parameters of the solvers. Lengths are in similarity units
/// `zeta = x / (t+1)^{1/theta}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub theta: f64,
    pub dim: usize,
    /// Half-width of the stepping box.
    pub box_zeta: f64,
    /// Grid points on each side of the origin in the stepping box.
    pub box_half: usize,
    /// Half-width of the returned output window.
    pub window_zeta: f64,
    /// Output points per side for direct semigroup evaluation.
    pub window_half: usize,
    /// Relative step `dt = delta (t+1)`.
    pub delta: f64,
    /// Check each run against one with halved steps.
    pub refine: bool,
    pub max_halvings: u32,
    /// Successive step-halved runs must agree to `0.5 * step_tolerance`.
    pub step_tolerance: f64,
    pub blowup_cap: f64,
    /// Largest admissible kernel mass outside the stepping box.
    pub box_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: 1.0,
            dim: 1,
            box_zeta: 80.0,
            box_half: 3200,
            window_zeta: 30.0,
            window_half: 1500,
            delta: 0.05,
            refine: true,
            max_halvings: 3,
            step_tolerance: 1e-3,
            blowup_cap: 1e6,
            box_tolerance: 0.02,
        }
    }
}

impl SolverConfig {
    pub fn for_theta(theta: f64) -> Self {
        SolverConfig {
            theta,
            ..Default::default()
        }
    }

    /// Grid on which initial data for stepped runs are sampled.
    pub fn initial_grid(&self) -> Result<Grid1D> {
        Engine::initial_grid(self)
    }

    /// Default output grid at time `t`.
    pub fn window_grid(&self, t: f64) -> Result<Grid1D> {
        let ext = self.window_zeta * (t + 1.0).powf(1.0 / self.theta);
        Grid1D::new(ext / self.window_half as f64, self.window_half)
    }
}

/// Power nonlinearity `F(u) = lambda |u|^{p-1} u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    pub lambda: f64,
    pub p: f64,
    /// Free parameter of the rate model `h_sigma`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    0.1
}

impl NonlinearSpec {
    pub fn new(lambda: f64, p: f64) -> Self {
        NonlinearSpec {
            lambda,
            p,
            sigma: default_sigma(),
        }
    }

    /// `A_p = N (p - 1) / theta`.
    pub fn a_p(&self, theta: f64, dim: usize) -> f64 {
        dim as f64 * (self.p - 1.0) / theta
    }

    pub fn validate(&self, theta: f64, dim: usize) -> Result<()> {
        if !(self.p > 1.0 + theta / dim as f64) {
            return Err(Error::Constraint(format!(
                "p = {} must exceed 1 + theta/N = {}",
                self.p,
                1.0 + theta / dim as f64
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.lambda * u.abs().powf(self.p - 1.0) * u
    }

    /// `h_sigma(t) = t^{-(A_p - 1) + sigma} + t^{-1} + t^{-1/theta}`.
    pub fn h_sigma(&self, theta: f64, dim: usize, t: f64) -> f64 {
        t.powf(-(self.a_p(theta, dim) - 1.0) + self.sigma) + 1.0 / t + t.powf(-1.0 / theta)
    }
}

/// A source term that can be sampled on any grid at any time.
pub trait Forcing: Sync {
    fn sample(&self, grid: &Grid1D, s: f64) -> Result<Vec<f64>>;
}

/// Forcing given pointwise by `f(x, s)`.
pub struct FnForcing<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Forcing for FnForcing<F> {
    fn sample(&self, grid: &Grid1D, s: f64) -> Result<Vec<f64>> {
        Ok(grid.points().map(|x| (self.0)(x, s)).collect())
    }
}

impl Forcing for SpaceTimeField {
    fn sample(&self, grid: &Grid1D, s: f64) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::NoSampleTimes);
        }
        Ok(grid.points().map(|x| self.eval(x, s)).collect())
    }
}

/// Output of a linear solve: trajectory plus the discrete data needed to build
/// consistent expansions.
#[derive(Debug, Clone)]
pub struct LinearRun {
    pub trajectory: SpaceTimeField,
    /// Moments of the initial datum as seen by the solver.
    pub phi_moments: [f64; TRACKED],
    /// Source history (empty when there is no forcing).
    pub history: SourceHistory,
    /// Relative step actually used.
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct NonlinearRun {
    pub trajectory: SpaceTimeField,
    pub phi_moments: [f64; TRACKED],
    /// History of `F(u)`.
    pub history: SourceHistory,
    pub delta: f64,
    pub nonlinear: NonlinearSpec,
    /// Initial datum on the stepping grid.
    pub phi: Field,
}

/// Solver front end for one `(theta, dim = 1)`.
pub struct Solver {
    kernel: Arc<Kernel>,
    cfg: SolverConfig,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        let kernel = Arc::new(Kernel::new(cfg.theta, cfg.dim)?);
        Self::with_kernel(kernel, cfg)
    }

    pub fn with_kernel(kernel: Arc<Kernel>, cfg: SolverConfig) -> Result<Self> {
        if cfg.dim != 1 {
            return Err(Error::InvalidParameter(
                "solvers are one-dimensional; use the kernel module for N = 2".into(),
            ));
        }
        if kernel.theta() != cfg.theta || kernel.dim() != cfg.dim {
            return Err(Error::InvalidParameter("kernel does not match solver config".into()));
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        Ok(Solver { kernel, cfg })
    }

    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `e^{-t(-Delta)^{theta/2}} phi` on the default output window.
    pub fn apply_semigroup(&self, phi: &Field, t: f64) -> Result<Field> {
        if t == 0.0 {
            return Ok(phi.clone());
        }
        self.apply_semigroup_on(phi, t, self.cfg.window_grid(t)?)
    }

    /// `e^{-t(-Delta)^{theta/2}} phi` sampled on `out`.
    ///
    /// For kernels wide against the data spacing this sums `h G(x - y_j, t)
    /// phi_j` directly; otherwise it convolves with band-limited weights on the
    /// data grid (padded to cover `out`) and interpolates.
    pub fn apply_semigroup_on(&self, phi: &Field, t: f64, out: Grid1D) -> Result<Field> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
        }
        let g = self.kernel.profile1(0, 0)?;
        let outside = g.tail_mass(out.extent() / t.max(1e-300).powf(1.0 / self.cfg.theta));
        if t > 0.0 && outside > self.cfg.box_tolerance {
            log::debug!("output window misses a kernel mass fraction {outside:.2e}");
        }
        let h = phi.grid.h;
        if t > 0.0 && t.powf(1.0 / self.cfg.theta) >= 20.0 * h {
            let src: Vec<(f64, f64)> = phi
                .grid
                .points()
                .zip(&phi.values)
                .filter(|(_, v)| **v != 0.0)
                .map(|(y, v)| (y, h * v))
                .collect();
            let scale = g.scale(t);
            let inv = t.powf(-1.0 / self.cfg.theta);
            let values: Vec<f64> = (0..out.len())
                .into_par_iter()
                .map(|i| {
                    let x = out.x(i);
                    scale * src.iter().map(|&(y, w)| w * g.value((x - y) * inv)).sum::<f64>()
                })
                .collect();
            return Field::new(out, values);
        }
        let pad = Grid1D::new(h, phi.grid.half.max((out.extent() / h).ceil() as usize))?;
        let lifted = phi.resample(pad);
        let mut conv = Convolver::new(pad.len());
        conv.load(&g, t, h)?;
        let spread = Field::new(pad, if t > 0.0 { conv.apply(&lifted.values) } else { lifted.values })?;
        if out == pad {
            return Ok(spread);
        }
        Ok(spread.resample(out))
    }

    /// `int_0^t e^{-(t-s)(-Delta)^{theta/2}} f(s) ds` on the output window.
    pub fn duhamel(&self, f: &dyn Forcing, t: f64) -> Result<Field> {
        let zero = Field::zeros(self.cfg.initial_grid()?);
        let run = self.solve_linear(&zero, Some(f), &[t])?;
        Ok(run.trajectory.slices.into_iter().next().expect("one slice"))
    }

    /// Mild solution of `u_t + (-Delta)^{theta/2} u = f`, `u(0) = phi`, at the
    /// requested times.
    pub fn solve_linear(&self, phi: &Field, f: Option<&dyn Forcing>, times: &[f64]) -> Result<LinearRun> {
        check_times(times)?;
        let Some(f) = f else {
            let slices = times
                .par_iter()
                .map(|&t| self.apply_semigroup(phi, t))
                .collect::<Result<Vec<_>>>()?;
            let mut phi_moments = [0.0; TRACKED];
            for (a, m) in phi_moments.iter_mut().enumerate() {
                *m = crate::field::raw_moment(phi, a as u32);
            }
            return Ok(LinearRun {
                trajectory: SpaceTimeField::new(times.to_vec(), slices)?,
                phi_moments,
                history: SourceHistory::default(),
                delta: self.cfg.delta,
            });
        };
        let (traj, levels, delta, _) = self.refined(phi, times, &mut |_, ctx| f.sample(ctx.grid, ctx.s))?;
        Ok(LinearRun {
            trajectory: traj,
            phi_moments: levels[0].init_moments,
            history: levels.into_iter().next().unwrap().history,
            delta,
        })
    }

    /// Forced linear solve at a fixed relative step (no refinement), so that
    /// its source history lives on the same mesh as another run with `delta`.
    pub fn solve_linear_fixed(
        &self,
        phi: &Field,
        f: &dyn Forcing,
        times: &[f64],
        delta: f64,
    ) -> Result<LinearRun> {
        check_times(times)?;
        let phi = self.lift_initial(phi)?;
        let (traj, levels) = self.single(&phi, times, delta, &mut |_, ctx| f.sample(ctx.grid, ctx.s))?;
        Ok(LinearRun {
            trajectory: traj,
            phi_moments: levels[0].init_moments,
            history: levels.into_iter().next().unwrap().history,
            delta,
        })
    }

    /// Mild solution of `u_t + (-Delta)^{theta/2} u = lambda |u|^{p-1} u`.
    pub fn solve_nonlinear(&self, phi: &Field, nl: &NonlinearSpec, times: &[f64]) -> Result<NonlinearRun> {
        check_times(times)?;
        nl.validate(self.cfg.theta, self.cfg.dim)?;
        let nl = *nl;
        let mut src = |_: usize, ctx: &SourceCtx| -> Result<Vec<f64>> {
            Ok(ctx.states[0].iter().map(|&u| nl.f(u)).collect())
        };
        let (traj, levels, delta, phi0) = self.refined(phi, times, &mut src)?;
        Ok(NonlinearRun {
            trajectory: traj,
            phi_moments: levels[0].init_moments,
            history: levels.into_iter().next().unwrap().history,
            delta,
            nonlinear: nl,
            phi: phi0,
        })
    }

    /// Initial datum on the stepping grid.
    pub fn lift_initial(&self, phi: &Field) -> Result<Field> {
        let grid = self.cfg.initial_grid()?;
        Ok(if phi.grid == grid { phi.clone() } else { phi.resample(grid) })
    }

    /// Step one level from `phi` with the given source; returns the windowed
    /// trajectory and final levels.
    pub(crate) fn run_levels(
        &self,
        init: Vec<Level>,
        times: &[f64],
        delta: f64,
        source: &mut dyn FnMut(usize, &SourceCtx) -> Result<Vec<f64>>,
        on_output: &mut dyn FnMut(f64, &Engine, &[Level]) -> Result<()>,
    ) -> Result<Vec<Level>> {
        let mut engine = Engine::new(&self.kernel, &self.cfg)?;
        let mut levels = init;
        let mesh = time_mesh(times, delta);
        engine.run(&mut levels, &mesh, times, self.cfg.blowup_cap, source, on_output)?;
        Ok(levels)
    }

    pub(crate) fn initial_level(&self, phi: &Field) -> Result<Level> {
        let grid = self.cfg.initial_grid()?;
        let mut values = vec![0.0; 4 * grid.half + 1];
        values[grid.half..=3 * grid.half].copy_from_slice(&phi.values);
        Ok(Level {
            values,
            init_moments: lattice_moments(&grid, &phi.values),
            history: SourceHistory::default(),
            ghost_acc: Vec::new(),
        })
    }

    pub(crate) fn zero_level(&self) -> Result<Level> {
        let grid = self.cfg.initial_grid()?;
        Ok(Level {
            values: vec![0.0; 4 * grid.half + 1],
            init_moments: [0.0; TRACKED],
            history: SourceHistory::default(),
            ghost_acc: Vec::new(),
        })
    }

    fn single(
        &self,
        phi: &Field,
        times: &[f64],
        delta: f64,
        source: &mut dyn FnMut(usize, &SourceCtx) -> Result<Vec<f64>>,
    ) -> Result<(SpaceTimeField, Vec<Level>)> {
        let mut slices = Vec::new();
        let levels = self.run_levels(
            vec![self.initial_level(phi)?],
            times,
            delta,
            source,
            &mut |t, e, lv| {
                slices.push(e.window(&lv[0].values, t));
                Ok(())
            },
        )?;
        Ok((SpaceTimeField::new(times.to_vec(), slices)?, levels))
    }

    /// Run with step doubling until successive runs agree.
    fn refined(
        &self,
        phi: &Field,
        times: &[f64],
        source: &mut dyn FnMut(usize, &SourceCtx) -> Result<Vec<f64>>,
    ) -> Result<(SpaceTimeField, Vec<Level>, f64, Field)> {
        let phi = self.lift_initial(phi)?;
        let mut delta = self.cfg.delta;
        let (mut traj, mut levels) = self.single(&phi, times, delta, source)?;
        if !self.cfg.refine {
            return Ok((traj, levels, delta, phi));
        }
        for _ in 0..self.cfg.max_halvings {
            delta *= 0.5;
            let (t2, l2) = self.single(&phi, times, delta, source)?;
            let diff = trajectory_gap(&traj, &t2);
            traj = t2;
            levels = l2;
            log::debug!("step refinement delta = {delta}: relative change {diff:.3e}");
            if diff < 0.5 * self.cfg.step_tolerance {
                return Ok((traj, levels, delta, phi));
            }
        }
        Err(Error::StepRefinement(format!(
            "no agreement to {} after {} halvings",
            0.5 * self.cfg.step_tolerance,
            self.cfg.max_halvings
        )))
    }
}

/// Largest per-slice relative sup-norm difference.
fn trajectory_gap(a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    a.slices
        .iter()
        .zip(&b.slices)
        .map(|(x, y)| {
            let d = x.values.iter().zip(&y.values).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            let s = y.sup_norm();
            if s > 0.0 { d / s } else { d }
        })
        .fold(0.0, f64::max)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::NoSampleTimes);
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "times must be non-negative and strictly increasing".into(),
        ));
    }
    Ok(())
}
