//! Exponential-midpoint stepping on a self-similarly growing box.
//!
//! The state lives on `|x| <= L` with `L = H h = Z 2^r`, surrounded by a ghost
//! band `L < |x| <= 2L` that is refilled before every convolution from a far
//! field: a multipole part (moments over `|y| <= L/2` of the initial datum and
//! of every recorded source, pushed through the large-distance expansion of the
//! kernel) plus the sources deposited on the band itself, accumulated in place.
//! The same far field, continued beyond the band, gives the mass that the
//! heavy kernel tail carries in from outside `2L` during each convolution.
//! Whenever
//! `(t+1)^{1/theta}` reaches `2^{r+1}` the spacing doubles and even samples are
//! kept.
//!
//! Several levels can be stepped in lockstep on one mesh; the source of a level
//! may depend on the (predicted) states and histories of the levels before it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::conv::Convolver;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::field::{Field, Grid1D};
use crate::index::factorial;
use crate::kernel::{Kernel, KernelProfile};
use crate::quad::GaussLegendre;

/// Number of moments tracked per source (`alpha = 0..=3`).
pub const TRACKED: usize = 4;

/// Discrete Duhamel record: the source `S_j` acts at `s[j]` with weight `dt[j]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SourceHistory {
    pub s: Vec<f64>,
    pub dt: Vec<f64>,
    pub moments: Vec<[f64; TRACKED]>,
    /// Moments over the core `|y| <= L/2`, used by the far field.
    #[serde(default)]
    pub far: Vec<[f64; 3]>,
}

impl SourceHistory {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn push(&mut self, s: f64, dt: f64, moments: [f64; TRACKED]) {
        self.push_with_far(s, dt, moments, [moments[0], moments[1], moments[2]]);
    }

    pub fn push_with_far(&mut self, s: f64, dt: f64, moments: [f64; TRACKED], far: [f64; 3]) {
        self.s.push(s);
        self.dt.push(dt);
        self.moments.push(moments);
        self.far.push(far);
    }

    /// `int_0^t (s+1)^m M_alpha(S(s)) ds` for the piecewise-constant source,
    /// accumulated linearly inside a step.
    pub fn integral(&self, alpha: usize, m: u32, t: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.s.len() {
            let start = self.s[j] - 0.5 * self.dt[j];
            if start >= t {
                break;
            }
            let w = (t - start).min(self.dt[j]);
            acc += w * (self.s[j] + 1.0).powi(m as i32) * self.moments[j][alpha];
        }
        acc
    }

    /// Per-step moment series `(s_j, M_alpha(S_j))`.
    pub fn series(&self, alpha: usize) -> Vec<(f64, f64)> {
        self.s
            .iter()
            .zip(&self.moments)
            .map(|(&s, m)| (s, m[alpha]))
            .collect()
    }
}

/// One stepped quantity: grid values, moments of its initial datum, and the
/// history of the sources fed into it.
#[derive(Debug, Clone)]
pub struct Level {
    pub values: Vec<f64>,
    pub init_moments: [f64; TRACKED],
    pub history: SourceHistory,
    /// Running sum of `dt S_j(x)` on the ghost band, the local part of the
    /// far field (empty until the first step).
    pub ghost_acc: Vec<f64>,
}

/// Stepping times from 0 through every requested time, geometric in `t + 1`
/// with ratio at most `1 + delta`, hitting each requested time exactly.
pub fn time_mesh(times: &[f64], delta: f64) -> Vec<f64> {
    let mut mesh = vec![0.0];
    let mut a = 0.0f64;
    for &b in times {
        if b <= a {
            continue;
        }
        let n = (((b + 1.0) / (a + 1.0)).ln() / (1.0 + delta).ln()).ceil().max(1.0) as usize;
        let r = ((b + 1.0) / (a + 1.0)).powf(1.0 / n as f64);
        for k in 1..n {
            mesh.push((a + 1.0) * r.powi(k as i32) - 1.0);
        }
        mesh.push(b);
        a = b;
    }
    mesh
}

/// Large-distance form of `d_x^alpha G(x, tau)` as `sum_n c_n |x|^{-e_n} tau^{k_n}`.
struct FarTerms {
    terms: [Vec<(f64, f64, f64)>; 3],
}

const FAR_TERMS: usize = 12;

impl FarTerms {
    fn new(kernel: &Kernel) -> Result<Self> {
        let theta = kernel.theta();
        let mut terms: [Vec<(f64, f64, f64)>; 3] = Default::default();
        for (a, slot) in terms.iter_mut().enumerate() {
            let p = kernel.profile1(a as u32, 0)?;
            *slot = p
                .tail()
                .power_terms(FAR_TERMS)
                .into_iter()
                .map(|(c, e)| (c, e, (e - 1.0 - a as f64) / theta))
                .collect();
        }
        Ok(FarTerms { terms })
    }
}

/// Far field of one level at a fixed time.
struct FarField {
    tm: [Vec<f64>; 3],
    /// Ghost accumulator at the two outer edges.
    edges: (f64, f64),
    edge: f64,
    theta: f64,
}

impl FarField {
    fn multipole(&self, terms: &FarTerms, x: f64) -> f64 {
        let lx = x.abs().ln();
        let mut acc = 0.0;
        for a in 0..3 {
            let parity = if x < 0.0 && a % 2 == 1 { -1.0 } else { 1.0 };
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 } / factorial(a as u32);
            let s: f64 = terms.terms[a]
                .iter()
                .zip(&self.tm[a])
                .map(|(&(c, e, _), &m)| c * (-e * lx).exp() * m)
                .sum();
            acc += sign * parity * s;
        }
        acc
    }

    /// Value beyond the band, the accumulated band sources continued as a power law.
    fn value(&self, terms: &FarTerms, x: f64) -> f64 {
        let edge = if x < 0.0 { self.edges.0 } else { self.edges.1 };
        self.multipole(terms, x) + edge * (self.edge / x.abs()).powf(1.0 + self.theta)
    }
}

const EXT_NODES: usize = 17;

/// Barycentric interpolation on Chebyshev points of the second kind.
fn chebyshev_interp(nodes: &[f64], vals: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        let d = x - nodes[j];
        if d == 0.0 {
            return vals[j];
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            w *= 0.5;
        }
        num += w / d * vals[j];
        den += w / d;
    }
    num / den
}

pub(crate) struct Engine {
    theta: f64,
    level: i32,
    /// Inner (state) half-width in points; the grid carries `2 * half`.
    half: usize,
    pub(crate) grid: Grid1D,
    conv: Convolver,
    window_zeta: f64,
    g0: Arc<KernelProfile>,
    far: FarTerms,
    ext_rule: GaussLegendre,
}

/// View handed to source callbacks.
pub(crate) struct SourceCtx<'a> {
    /// Extended grid (state plus ghost band).
    pub grid: &'a Grid1D,
    pub s: f64,
    /// States of all levels at `s` (actual or predicted), ghost band included.
    pub states: &'a [Vec<f64>],
    /// Levels, whose histories already include the current half step for
    /// lower levels at the midpoint stage.
    pub levels: &'a [Level],
}

impl Engine {
    pub fn new(kernel: &Kernel, cfg: &SolverConfig) -> Result<Self> {
        if !cfg.box_half.is_multiple_of(2) || cfg.box_half < 16 {
            return Err(Error::InvalidParameter("box_half must be even and >= 16".into()));
        }
        if cfg.window_zeta > 0.5 * cfg.box_zeta {
            return Err(Error::InvalidParameter(
                "window_zeta must not exceed half of box_zeta".into(),
            ));
        }
        let g0 = kernel.profile1(0, 0)?;
        let outside = g0.tail_mass(cfg.box_zeta);
        if outside > cfg.box_tolerance {
            return Err(Error::BoxTooSmall(format!(
                "kernel mass beyond zeta = {} is {outside:.3e} (> {})",
                cfg.box_zeta, cfg.box_tolerance
            )));
        }
        let h0 = cfg.box_zeta / cfg.box_half as f64;
        let grid = Grid1D::new(h0, 2 * cfg.box_half)?;
        Ok(Engine {
            theta: kernel.theta(),
            level: 0,
            half: cfg.box_half,
            grid,
            conv: Convolver::new(grid.len()),
            window_zeta: cfg.window_zeta,
            g0,
            far: FarTerms::new(kernel)?,
            ext_rule: GaussLegendre::new(32),
        })
    }

    /// Grid at level 0 on which initial data are sampled (no ghost band).
    pub fn initial_grid(cfg: &SolverConfig) -> Result<Grid1D> {
        Grid1D::new(cfg.box_zeta / cfg.box_half as f64, cfg.box_half)
    }

    pub fn lattice_moments(&self, v: &[f64]) -> [f64; TRACKED] {
        lattice_moments(&self.grid, v)
    }

    /// Moments of `v` over the core `|y| <= L/2`.
    fn core_moments(&self, v: &[f64]) -> [f64; 3] {
        let c = 2 * self.half;
        let q = self.half / 2;
        let mut m = [0.0; 3];
        for i in c - q..=c + q {
            let x = self.grid.x(i);
            let w = self.grid.h * v[i];
            m[0] += w;
            m[1] += w * x;
            m[2] += w * x * x;
        }
        m
    }

    fn propagate(&mut self, tau: f64, v: &[f64], far: &FarField) -> Result<Vec<f64>> {
        self.conv.load(&self.g0, tau, self.grid.h)?;
        let mut out = self.conv.apply(v);
        for (o, e) in out.iter_mut().zip(self.exterior(far, tau)?) {
            *o += e;
        }
        Ok(out)
    }

    fn is_ghost(&self, i: usize) -> bool {
        i < self.half || i > 3 * self.half
    }

    /// Far field of `lv` at time `t`.
    fn far_field(&self, lv: &Level, t: f64) -> FarField {
        // time moments sum_j w_j (t - s_j)^k per (alpha, term)
        let mut tm: [Vec<f64>; 3] = Default::default();
        for (a, terms) in self.far.terms.iter().enumerate() {
            tm[a] = terms
                .iter()
                .map(|&(_, _, k)| {
                    let mut acc = if t > 0.0 { lv.init_moments[a] * t.powf(k) } else { 0.0 };
                    for j in 0..lv.history.len() {
                        let age = t - lv.history.s[j];
                        if age > 0.0 {
                            acc += lv.history.dt[j] * lv.history.far[j][a] * age.powf(k);
                        }
                    }
                    acc
                })
                .collect();
        }
        let n = self.grid.len();
        let edges = match lv.ghost_acc.len() {
            0 => (0.0, 0.0),
            _ => (lv.ghost_acc[0], lv.ghost_acc[n - 1]),
        };
        FarField { tm, edges, edge: self.grid.x(n - 1), theta: self.theta }
    }

    /// Overwrite the ghost band of `v` with the far field of `lv` at `t`.
    pub(crate) fn refresh_ghost(&self, lv: &Level, v: &mut [f64], t: f64) {
        let far = self.far_field(lv, t);
        for i in (0..self.half).chain(3 * self.half + 1..self.grid.len()) {
            let x = self.grid.x(i);
            v[i] = far.multipole(&self.far, x) + lv.ghost_acc.get(i).copied().unwrap_or(0.0);
        }
    }

    /// What the mass beyond the ghost band sends onto the interior in time
    /// `tau`, at Chebyshev nodes and interpolated.
    fn exterior(&self, far: &FarField, tau: f64) -> Result<Vec<f64>> {
        let l = self.half as f64 * self.grid.h;
        let r = far.edge + 0.5 * self.grid.h;
        let gl = &self.ext_rule;
        let nodes: Vec<f64> = (0..EXT_NODES)
            .map(|j| l * (std::f64::consts::PI * j as f64 / (EXT_NODES - 1) as f64).cos())
            .collect();
        let mut vals = Vec::with_capacity(EXT_NODES);
        for &x in &nodes {
            let mut s = 0.0;
            for (&v, &w) in gl.nodes.iter().zip(&gl.weights) {
                let v = 0.5 * (v + 1.0);
                let y = r / v;
                let jac = 0.5 * w * r / (v * v);
                s += jac
                    * (self.g0.eval(y - x, tau)? * far.value(&self.far, y)
                        + self.g0.eval(y + x, tau)? * far.value(&self.far, -y));
            }
            vals.push(s);
        }
        let mut out = vec![0.0; self.grid.len()];
        for (i, o) in out.iter_mut().enumerate().take(3 * self.half + 1).skip(self.half) {
            *o = chebyshev_interp(&nodes, &vals, self.grid.x(i));
        }
        Ok(out)
    }

    /// Ghost accumulator on the doubled grid: the new band lies wholly beyond
    /// the old one, so continue the old band's outer samples as `|x|^{-1-theta}`.
    fn regrid_acc(&self, acc: &[f64], new: &Grid1D) -> Vec<f64> {
        if acc.is_empty() {
            return Vec::new();
        }
        let n = self.grid.len();
        let (l_left, l_right) = (acc[0], acc[n - 1]);
        let edge = self.grid.x(n - 1);
        let mut out = vec![0.0; new.len()];
        for (j, o) in out.iter_mut().enumerate() {
            if !(j < self.half || j > 3 * self.half) {
                continue;
            }
            let x = new.x(j);
            let r = (edge / x.abs()).powf(1.0 + self.theta);
            *o = if x < 0.0 { l_left } else { l_right } * r;
        }
        out
    }

    fn regrid_if_needed(&mut self, t: f64, levels: &mut [Level]) -> Result<()> {
        while (t + 1.0).powf(1.0 / self.theta) >= 2f64.powi(self.level + 1) {
            let h = 2.0 * self.grid.h;
            let new = Grid1D::new(h, 2 * self.half)?;
            let c = 2 * self.half as isize;
            for lv in levels.iter_mut() {
                // the old ghost band becomes interior: fill it from the far field first
                let mut old = std::mem::take(&mut lv.values);
                self.refresh_ghost(lv, &mut old, t);
                lv.values = old;
                let mut vals = vec![0.0; new.len()];
                for (j, v) in vals.iter_mut().enumerate() {
                    let i = 2 * j as isize - c;
                    if i >= 0 && (i as usize) < self.grid.len() {
                        *v = lv.values[i as usize];
                    }
                }
                lv.values = vals;
                lv.ghost_acc = self.regrid_acc(&lv.ghost_acc, &new);
            }
            self.grid = new;
            self.level += 1;
            log::debug!("regrid at t = {t}: h = {h}");
        }
        Ok(())
    }

    /// Restriction of `v` to `|x| <= window_zeta (t+1)^{1/theta}`.
    pub fn window(&self, v: &[f64], t: f64) -> Field {
        let ext = self.window_zeta * (t + 1.0).powf(1.0 / self.theta);
        let half = ((ext / self.grid.h).floor() as usize).min(self.half);
        let lo = 2 * self.half - half;
        Field {
            grid: Grid1D { h: self.grid.h, half },
            values: v[lo..=lo + 2 * half].to_vec(),
            support_hint: None,
        }
    }

    /// Step all levels over `mesh`, calling `on_output(t, engine, levels)` at
    /// each time in `outputs` (which must lie on the mesh). `source(l, ctx)`
    /// gives the source of level `l` on the extended grid.
    pub fn run(
        &mut self,
        levels: &mut [Level],
        mesh: &[f64],
        outputs: &[f64],
        blowup_cap: f64,
        source: &mut dyn FnMut(usize, &SourceCtx) -> Result<Vec<f64>>,
        on_output: &mut dyn FnMut(f64, &Engine, &[Level]) -> Result<()>,
    ) -> Result<()> {
        let is_output = |t: f64| outputs.iter().any(|&o| (o - t).abs() <= 1e-12 * (1.0 + t));
        if is_output(mesh[0]) {
            on_output(mesh[0], self, levels)?;
        }
        let nl = levels.len();
        for w in mesh.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let dt = s1 - s0;
            let tau = 0.5 * dt;
            let smid = s0 + tau;
            self.regrid_if_needed(s0, levels)?;

            let mut states: Vec<Vec<f64>> = Vec::with_capacity(nl);
            for lv in levels.iter() {
                let mut v = lv.values.clone();
                self.refresh_ghost(lv, &mut v, s0);
                states.push(v);
            }
            let far0: Vec<FarField> = levels.iter().map(|lv| self.far_field(lv, s0)).collect();
            let mut left = Vec::with_capacity(nl);
            for l in 0..nl {
                let ctx = SourceCtx { grid: &self.grid, s: s0, states: &states, levels };
                left.push(source(l, &ctx)?);
            }
            let mut free = Vec::with_capacity(nl);
            let mut pred = Vec::with_capacity(nl);
            for l in 0..nl {
                let mut a = self.propagate(tau, &states[l], &far0[l])?;
                self.refresh_ghost(&levels[l], &mut a, smid);
                free.push(a);
                let push: Vec<f64> = states[l]
                    .iter()
                    .zip(&left[l])
                    .map(|(u, f)| u + tau * f)
                    .collect();
                let mut p = self.propagate(tau, &push, &far0[l])?;
                self.refresh_ghost(&levels[l], &mut p, smid);
                pred.push(p);
            }
            for l in 0..nl {
                let mid = {
                    let ctx = SourceCtx { grid: &self.grid, s: smid, states: &pred, levels };
                    source(l, &ctx)?
                };
                let far_mid = self.far_field(&levels[l], smid);
                let mom = self.lattice_moments(&mid);
                let far = self.core_moments(&mid);
                levels[l].history.push_with_far(smid, dt, mom, far);
                let n = self.grid.len();
                let acc = &mut levels[l].ghost_acc;
                acc.resize(n, 0.0);
                for i in (0..self.half).chain(3 * self.half + 1..n) {
                    acc[i] += dt * mid[i];
                }
                let push: Vec<f64> = free[l].iter().zip(&mid).map(|(a, f)| a + dt * f).collect();
                let mut next = self.propagate(tau, &push, &far_mid)?;
                for (i, v) in next.iter_mut().enumerate() {
                    if self.is_ghost(i) {
                        *v = 0.0;
                    }
                }
                levels[l].values = next;
            }
            let sup = levels[0].values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(sup <= blowup_cap) {
                return Err(Error::BlowUp { t: s1, last_valid: s0 });
            }
            if is_output(s1) {
                on_output(s1, self, levels)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn lattice_moments(grid: &Grid1D, v: &[f64]) -> [f64; TRACKED] {
    let mut m = [0.0; TRACKED];
    for (i, &f) in v.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let x = grid.x(i);
        let mut p = grid.h * f;
        for mk in m.iter_mut() {
            *mk += p;
            p *= x;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_hits_requested_times() {
        let m = time_mesh(&[1.0, 10.0, 100.0], 0.05);
        for t in [1.0, 10.0, 100.0] {
            assert!(m.contains(&t));
        }
        for w in m.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] + 1.0) / (w[0] + 1.0) <= 1.05 + 1e-12);
        }
    }

    #[test]
    fn history_integral_is_piecewise_linear() {
        let mut h = SourceHistory::default();
        h.push(0.5, 1.0, [2.0, 0.0, 0.0, 0.0]);
        h.push(1.5, 1.0, [4.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.integral(0, 0, 2.0), 6.0);
        assert_eq!(h.integral(0, 0, 1.5), 4.0);
        assert_eq!(h.integral(0, 1, 1.0), 3.0);
    }
}
