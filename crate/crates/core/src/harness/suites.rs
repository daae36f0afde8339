//! Boundedness and bookkeeping checks that are not slope fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_rate, RateFit};
use crate::error::{Error, Result};
use crate::field::{e_functional, moment_with_tail, norm_q_ell, Field, Grid1D, SpaceTimeField};
use crate::kernel::Kernel;
use crate::semigroup::{NonlinearRun, Solver, SourceHistory};

/// Outcome of one bounded quantity against its cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub cap: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, cap: f64, detail: String) -> Self {
        Check { name: name.into(), value, cap, passed: value <= cap, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.4e} (cap {:.4e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.cap,
            self.detail
        )
    }
}

/// One point `(q, r, alpha, m, ell)` of the derivative-estimate lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeIndex {
    pub q: f64,
    pub r: f64,
    pub alpha: u32,
    pub m: u32,
    pub ell: f64,
}

impl DerivativeIndex {
    /// `0 <= ell < theta max(m,1) + alpha + N (1/q - 1/r)`, `q <= r`.
    pub fn admissible(&self, theta: f64, dim: usize) -> bool {
        let mp = self.m.max(1) as f64;
        self.q >= 1.0
            && self.r >= self.q
            && self.ell >= 0.0
            && self.ell < theta * mp + self.alpha as f64 + dim as f64 * (1.0 / self.q - 1.0 / self.r)
    }
}

/// The admissible points of `q in {1,2}`, `r in {q, inf}`, `alpha, m in {0,1}`,
/// `ell in {0, 1/2, 1}`.
pub fn derivative_lattice(theta: f64, dim: usize) -> Vec<DerivativeIndex> {
    let mut out = Vec::new();
    for q in [1.0, 2.0] {
        for r in [q, f64::INFINITY] {
            for alpha in 0..=1 {
                for m in 0..=1 {
                    for ell in [0.0, 0.5, 1.0] {
                        let d = DerivativeIndex { q, r, alpha, m, ell };
                        if d.admissible(theta, dim) {
                            out.push(d);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `d_t^m d_x^alpha e^{-t(-Delta)^{theta/2}} phi` on `out`, by summing the
/// derivative kernel against the samples of `phi`.
pub fn apply_derivative(kernel: &Kernel, alpha: u32, m: u32, phi: &Field, t: f64, out: Grid1D) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let p = kernel.profile1(alpha, m)?;
    let h = phi.grid.h;
    let src: Vec<(f64, f64)> = phi
        .grid
        .points()
        .zip(&phi.values)
        .filter(|(_, v)| **v != 0.0)
        .map(|(y, v)| (y, h * v))
        .collect();
    let scale = p.scale(t);
    let inv = t.powf(-1.0 / kernel.theta());
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|i| {
            let x = out.x(i);
            scale * src.iter().map(|&(y, w)| w * p.value((x - y) * inv)).sum::<f64>()
        })
        .collect();
    Field::new(out, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub index: DerivativeIndex,
    pub t: f64,
    pub ratio: f64,
}

/// `t^{(N/theta)(1/q-1/r)+alpha/theta+m} |||d_t^m d_x^alpha e^{-t..}phi|||_{r,ell}`
/// over `t^{ell/theta} ||phi||_q + |||phi|||_{q,ell}`. `datum` is resampled at
/// a spacing that resolves the kernel at each `t`.
pub fn derivative_ratios(
    kernel: &Kernel,
    datum: &dyn Fn(f64) -> f64,
    support: f64,
    lattice: &[DerivativeIndex],
    times: &[f64],
) -> Result<Vec<RatioSample>> {
    let theta = kernel.theta();
    let n = kernel.dim() as f64;
    let mut out = Vec::new();
    for &t in times {
        let s = t.powf(1.0 / theta);
        let h = (s / 20.0).min(0.025);
        let phi = Field::from_fn(Grid1D::covering(support, h)?, datum)?;
        let grid = Grid1D::covering(support + 30.0 * s, s / 20.0)?;
        let mut by_order: Vec<((u32, u32), Field)> = Vec::new();
        for d in lattice {
            if !by_order.iter().any(|(k, _)| *k == (d.alpha, d.m)) {
                by_order.push(((d.alpha, d.m), apply_derivative(kernel, d.alpha, d.m, &phi, t, grid)?));
            }
        }
        for d in lattice {
            let v = &by_order.iter().find(|(k, _)| *k == (d.alpha, d.m)).unwrap().1;
            let lhs = t.powf(n / theta * (1.0 / d.q - 1.0 / d.r) + d.alpha as f64 / theta + d.m as f64)
                * norm_q_ell(v, d.r, d.ell);
            let rhs = t.powf(d.ell / theta) * norm_q_ell(&phi, d.q, 0.0) + norm_q_ell(&phi, d.q, d.ell);
            out.push(RatioSample { index: *d, t, ratio: lhs / rhs });
        }
    }
    Ok(out)
}

/// `t^{(N/theta)(1-1/r)} (t+1)^{(K-ell)/theta} |||f(t)|||_{r,ell} / E_{K,q}[f](t)`
/// for `r` in `rs` (each `<= q`) and `ell` in `ells` (each `<= K`); the maximum
/// over the slices of `f`.
pub fn interpolation_ratio(
    f: &SpaceTimeField,
    k: f64,
    q: f64,
    theta: f64,
    dim: usize,
    rs: &[f64],
    ells: &[f64],
) -> Result<f64> {
    let n = dim as f64;
    let mut worst = 0.0f64;
    for (&t, slice) in f.times.iter().zip(&f.slices) {
        let e = e_functional(slice, k, q, theta, dim, t)?;
        if e == 0.0 {
            continue;
        }
        for &r in rs.iter().filter(|r| **r <= q) {
            for &ell in ells.iter().filter(|l| **l <= k) {
                let lhs = t.powf(n / theta * (1.0 - 1.0 / r)) * (t + 1.0).powf((k - ell) / theta) * norm_q_ell(slice, r, ell);
                worst = worst.max(lhs / e);
            }
        }
    }
    Ok(worst)
}

/// `(t+1)^{(N/theta)(1-1/q) - ell/theta} |||u(t)|||_{q,ell}` per slice, and the
/// largest ratio of a later value to an earlier one.
pub fn scaled_norm_trend(u: &SpaceTimeField, q: f64, ell: f64, theta: f64, dim: usize) -> (Vec<f64>, f64) {
    let n = dim as f64;
    let scaled: Vec<f64> = u
        .times
        .iter()
        .zip(&u.slices)
        .map(|(t, s)| (t + 1.0).powf(n / theta * (1.0 - 1.0 / q) - ell / theta) * norm_q_ell(s, q, ell))
        .collect();
    let mut growth = 0.0f64;
    let mut lowest = f64::INFINITY;
    for &s in &scaled {
        if lowest.is_finite() {
            growth = growth.max(s / lowest);
        }
        lowest = lowest.min(s);
    }
    (scaled, growth)
}

/// Largest `|u(x,t)| - [e^{-t(-Delta)^{theta/2}} |phi|](x)` over the run.
pub fn comparison_excess(solver: &Solver, run: &NonlinearRun) -> Result<f64> {
    let abs = Field::new(run.phi.grid, run.phi.values.iter().map(|v| v.abs()).collect())?;
    let mut worst = f64::NEG_INFINITY;
    for (&t, u) in run.trajectory.times.iter().zip(&run.trajectory.slices) {
        let bound = solver.apply_semigroup_on(&abs, t, u.grid)?;
        for (a, b) in u.values.iter().zip(&bound.values) {
            worst = worst.max(a.abs() - b);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    /// `M_0(u(t)) - M_0(phi)` from the output slice.
    pub change: f64,
    /// `int_0^t M_0(F(u(s))) ds` from the source record.
    pub source: f64,
    pub relative: f64,
}

/// Mass change of the output slices against the integrated source mass,
/// relative to `M_0(u(t))`.
pub fn mass_ledger(run: &NonlinearRun) -> Vec<LedgerRow> {
    let m_phi = moment_with_tail(&run.phi, 0);
    run.trajectory
        .times
        .iter()
        .zip(&run.trajectory.slices)
        .map(|(&t, u)| {
            let m = moment_with_tail(u, 0);
            let source = run.history.integral(0, 0, t);
            let change = m - m_phi;
            LedgerRow { t, change, source, relative: (change - source).abs() / m.abs() }
        })
        .collect()
}

/// Log-log slope of `|M_0(S(s))|` over the final `decades` of the record.
pub fn moment_decay_slope(history: &SourceHistory, alpha: usize, decades: f64) -> Result<RateFit> {
    let series = history.series(alpha);
    let end = series.last().ok_or(Error::NoSampleTimes)?.0;
    let (t, v): (Vec<f64>, Vec<f64>) = series
        .into_iter()
        .filter(|(s, _)| *s >= end * 10f64.powf(-decades))
        .map(|(s, m)| (s, m.abs()))
        .unzip();
    fit_rate(&t, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_respects_constraint() {
        let l = derivative_lattice(1.0, 1);
        assert!(l.iter().all(|d| d.admissible(1.0, 1)));
        // q = r = 1, alpha = m = 0: ell < theta
        assert!(l.iter().any(|d| d.q == 1.0 && d.r == 1.0 && d.alpha == 0 && d.m == 0 && d.ell == 0.5));
        assert!(!l.iter().any(|d| d.q == 1.0 && d.r == 1.0 && d.alpha == 0 && d.m == 0 && d.ell == 1.0));
    }

    #[test]
    fn heat_derivative_against_closed_form() {
        // theta = 2: d_x e^{t Delta} of a Gaussian of variance 1/2 is explicit
        let k = Kernel::new(2.0, 1).unwrap();
        let phi = Field::from_fn(Grid1D::covering(8.0, 0.01).unwrap(), |x| (-x * x).exp()).unwrap();
        let out = Grid1D::covering(4.0, 0.5).unwrap();
        let t = 0.3;
        let v = apply_derivative(&k, 1, 0, &phi, t, out).unwrap();
        let a = 1.0 + 4.0 * t;
        for (x, got) in out.points().zip(&v.values) {
            let exact = -2.0 * x / a * (-x * x / a).exp() / a.sqrt();
            assert!((got - exact).abs() < 1e-8, "{x}: {got} vs {exact}");
        }
    }

    #[test]
    fn trend_of_decaying_series() {
        let g = Grid1D::new(1.0, 1).unwrap();
        let slices = [4.0, 2.0, 1.0, 1.02]
            .iter()
            .map(|v| Field::new(g, vec![0.0, *v, 0.0]).unwrap())
            .collect();
        let u = SpaceTimeField::new(vec![1.0, 2.0, 3.0, 4.0], slices).unwrap();
        let (_, growth) = scaled_norm_trend(&u, 1.0, 0.0, 1.0, 1);
        assert!((growth - 1.02).abs() < 1e-12);
    }
}
