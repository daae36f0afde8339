use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::j0;
use super::series::TailSeries;
use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::quad::GaussLegendre;

/// Bumped whenever the tabulation scheme changes; cached profiles with another
/// version are retabulated.
pub const PROFILE_VERSION: u32 = 1;

const QUAD_EPS: f64 = 1e-18;
const GL_ORDER: usize = 20;
const GRADING_LEVELS: usize = 48;
const STENCIL: usize = 6;

/// Frequency-quadrature parameters used for a tabulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadParams {
    pub rho_max: f64,
    /// Width of the uniform Gauss–Legendre panels.
    pub h_rho: f64,
    pub gl_order: usize,
    pub grading_levels: usize,
    pub nodes: usize,
}

/// Unit-time profile `P_{alpha,m}` of `d_t^m d_x^alpha G_theta`:
///
/// `d_t^m d_x^alpha G(x, t) = t^{-(N+|alpha|)/theta - m} P(t^{-1/theta} x)`.
///
/// Samples cover `0 <= z <= z_max` on a uniform grid; parity supplies negative
/// `z` and the large-`z` expansion supplies `|z| > z_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelProfile {
    pub version: u32,
    pub theta: f64,
    pub dim: usize,
    pub alpha: MultiIndex,
    pub m: u32,
    pub z_max: f64,
    pub h_z: f64,
    pub values: Vec<f64>,
    /// `N + theta * max(m, 1) + |alpha|`
    pub tail_exponent: f64,
    pub quad: QuadParams,
    /// Relative mismatch between quadrature and tail expansion at `z_max`.
    pub tail_mismatch: f64,
    tail: TailSeries,
}

pub(crate) fn validate_theta_dim(theta: f64, dim: usize) -> Result<()> {
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 2], got {theta}"
        )));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    Ok(())
}

/// Default `(z_max, resolution)` for a profile: the grid ends where the tail
/// expansion is accurate to round-off.
pub fn default_grid(theta: f64, dim: usize, alpha: &MultiIndex, m: u32) -> (f64, usize) {
    let h = if theta < 1.0 { 0.002 } else { 0.005 };
    let z_max = if theta >= 2.0 {
        40.0
    } else if theta <= 1.0 {
        4.0
    } else {
        let series = TailSeries::new(theta, dim, alpha.order(), m);
        [4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0]
            .into_iter()
            .find(|&z| series.relative_error(z) < 1e-13)
            .unwrap_or(128.0)
    };
    (z_max, (z_max / h).round() as usize)
}

/// Tabulate `P_{alpha,m}` by Fourier inversion on `[0, z_max]` with `resolution`
/// grid intervals.
pub fn tabulate_profile(
    theta: f64,
    dim: usize,
    alpha: &MultiIndex,
    m: u32,
    z_max: f64,
    resolution: usize,
) -> Result<KernelProfile> {
    validate_theta_dim(theta, dim)?;
    if alpha.dim() != dim {
        return Err(Error::InvalidParameter(format!(
            "multi-index {alpha} does not match dimension {dim}"
        )));
    }
    if dim == 2 && !alpha.is_zero() {
        return Err(Error::InvalidParameter(
            "2-D profiles are radial; only alpha = 0 is supported".into(),
        ));
    }
    if !(z_max > 0.0) || resolution < STENCIL {
        return Err(Error::InvalidParameter(format!(
            "need z_max > 0 and at least {STENCIL} grid intervals"
        )));
    }
    let order = alpha.order();
    let h_z = z_max / resolution as f64;

    // integrand amplitude rho^a exp(-rho^theta)
    let a = order as f64 + theta * m as f64 + if dim == 2 { 1.0 } else { 0.0 };
    let ln_amp = |r: f64| a * r.ln() - r.powf(theta);
    let r_peak = if a > 0.0 { (a / theta).powf(1.0 / theta) } else { 0.0 };
    let ln_peak = if a > 0.0 { ln_amp(r_peak) } else { 0.0 };
    let mut rho_max = r_peak.max(1.0);
    while ln_amp(rho_max) > ln_peak + QUAD_EPS.ln() {
        rho_max *= 1.05;
    }

    let h_rho = (PI / z_max).min(1.0);
    let rule = GaussLegendre::new(GL_ORDER);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut edge = h_rho;
    for _ in 0..GRADING_LEVELS {
        rule.push_panel(edge * 0.5, edge, &mut nodes, &mut weights);
        edge *= 0.5;
    }
    rule.push_panel(0.0, edge, &mut nodes, &mut weights);
    let panels = ((rho_max - h_rho) / h_rho).ceil().max(1.0) as usize;
    let w = (rho_max - h_rho) / panels as f64;
    for p in 0..panels {
        let lo = h_rho + p as f64 * w;
        rule.push_panel(lo, lo + w, &mut nodes, &mut weights);
    }

    let sign_m = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let n_z = resolution + 1;
    let mut values = vec![0.0; n_z];
    if dim == 1 {
        // (i xi)^alpha: cos branch for even alpha, sin branch for odd alpha
        let k = order / 2;
        let (use_sin, s_alpha) = if order.is_multiple_of(2) {
            (false, if k.is_multiple_of(2) { 1.0 } else { -1.0 })
        } else {
            (true, if k.is_multiple_of(2) { -1.0 } else { 1.0 })
        };
        let pre = sign_m * s_alpha / PI;
        for (&r, &wt) in nodes.iter().zip(&weights) {
            let amp = pre * wt * ln_amp(r).exp();
            if amp == 0.0 || !amp.is_finite() {
                continue;
            }
            // rotate exp(i z_i r) along the uniform z grid
            let (sd, cd) = (h_z * r).sin_cos();
            let (mut s, mut c) = (0.0f64, 1.0f64);
            for v in values.iter_mut() {
                *v += amp * if use_sin { s } else { c };
                let cn = c * cd - s * sd;
                s = s * cd + c * sd;
                c = cn;
            }
        }
    } else {
        let pre = sign_m / (2.0 * PI);
        let amps: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&r, &wt)| pre * wt * ln_amp(r).exp())
            .collect();
        for (i, v) in values.iter_mut().enumerate() {
            let z = i as f64 * h_z;
            *v = nodes
                .iter()
                .zip(&amps)
                .filter(|(_, &a)| a != 0.0)
                .map(|(&r, &a)| a * j0(z * r))
                .sum();
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Tabulation("non-finite profile sample".into()));
    }

    let tail = TailSeries::new(theta, dim, order, m);
    let tail_exponent = dim as f64 + theta * m.max(1) as f64 + order as f64;
    let end = values[n_z - 1];
    let tail_mismatch = if theta < 2.0 {
        let s = tail.eval(z_max);
        (s - end).abs() / end.abs().max(1e-300)
    } else {
        0.0
    };

    let profile = KernelProfile {
        version: PROFILE_VERSION,
        theta,
        dim,
        alpha: alpha.clone(),
        m,
        z_max,
        h_z,
        values,
        tail_exponent,
        quad: QuadParams {
            rho_max,
            h_rho,
            gl_order: GL_ORDER,
            grading_levels: GRADING_LEVELS,
            nodes: nodes.len(),
        },
        tail_mismatch,
        tail,
    };
    profile.check_invariants()?;
    Ok(profile)
}

impl KernelProfile {
    fn parity(&self) -> f64 {
        if self.dim == 1 && self.alpha.order() % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// `P(z)` at an arbitrary scaled position.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        let az = z.abs();
        if az > self.z_max {
            return if self.theta >= 2.0 { 0.0 } else { self.tail.eval(z) };
        }
        let v = self.interpolate(az);
        if z < 0.0 {
            self.parity() * v
        } else {
            v
        }
    }

    // Six-point Lagrange interpolation; parity reflects the stencil across 0.
    #[inline]
    fn interpolate(&self, az: f64) -> f64 {
        let n = self.values.len() as isize;
        let pos = az / self.h_z;
        let mut i0 = pos.floor() as isize - 2;
        if i0 + STENCIL as isize > n {
            i0 = n - STENCIL as isize;
        }
        let frac = pos - i0 as f64;
        let parity = self.parity();
        let mut acc = 0.0;
        for j in 0..STENCIL {
            let mut w = 1.0;
            for k in 0..STENCIL {
                if k != j {
                    w *= (frac - k as f64) / (j as f64 - k as f64);
                }
            }
            let idx = i0 + j as isize;
            let sample = if idx < 0 {
                parity * self.values[(-idx) as usize]
            } else {
                self.values[idx as usize]
            };
            acc += w * sample;
        }
        acc
    }

    /// `d_t^m d_x^alpha G(x, t)` for a 1-D position `x` (or radius in 2-D).
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Evaluation(format!("time must be positive, got {t}")));
        }
        let v = self.scale(t) * self.value(x * t.powf(-1.0 / self.theta));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite value at x={x}, t={t}")))
        }
    }

    /// Amplitude factor `t^{-(N+|alpha|)/theta - m}`.
    #[inline]
    pub fn scale(&self, t: f64) -> f64 {
        t.powf(-(self.dim as f64 + self.alpha.order() as f64) / self.theta - self.m as f64)
    }

    /// Total integral of `P` (with the analytic tail beyond the grid).
    pub fn mass(&self) -> f64 {
        // Simpson on the samples, composite with a trapezoid fix for odd counts
        let weight_power = if self.dim == 2 { 1.0 } else { 0.0 };
        let f: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * (i as f64 * self.h_z).powf(weight_power))
            .collect();
        let core = simpson(&f, self.h_z);
        let tail = if self.theta >= 2.0 {
            0.0
        } else {
            self.tail.integral_from(self.z_max, weight_power)
        };
        if self.dim == 1 {
            2.0 * (core + tail)
        } else {
            2.0 * PI * (core + tail)
        }
    }

    /// `int_{|z| > z0} P` (1-D, `alpha = 0`), used for box-truncation bounds.
    pub fn tail_mass(&self, z0: f64) -> f64 {
        if z0 >= self.z_max {
            return if self.theta >= 2.0 {
                0.0
            } else {
                2.0 * self.tail.integral_from(z0, 0.0)
            };
        }
        let i0 = (z0 / self.h_z).ceil() as usize;
        let tail_core = simpson(&self.values[i0..], self.h_z);
        let partial = 0.5 * (self.value(z0) + self.values[i0]) * (i0 as f64 * self.h_z - z0);
        2.0 * (tail_core + partial + self.tail.integral_from(self.z_max, 0.0))
    }

    fn check_invariants(&self) -> Result<()> {
        if self.theta < 2.0 && self.tail_mismatch > 1e-6 && self.values.last().unwrap().abs() > 1e-14 {
            return Err(Error::Tabulation(format!(
                "tail expansion and quadrature disagree at z_max = {} (relative {:.2e})",
                self.z_max, self.tail_mismatch
            )));
        }
        if self.alpha.is_zero() && self.m == 0 {
            if let Some((i, v)) = self.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                if *v < -1e-14 || self.theta < 2.0 {
                    return Err(Error::Tabulation(format!(
                        "profile not positive at z = {} ({v:e})",
                        i as f64 * self.h_z
                    )));
                }
            }
            if let Some(w) = self.values.windows(2).position(|w| w[1] > w[0] + 1e-15) {
                return Err(Error::Tabulation(format!(
                    "profile not radially decreasing near z = {}",
                    w as f64 * self.h_z
                )));
            }
            let mass = self.mass();
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::Tabulation(format!("profile mass {mass} differs from 1")));
            }
        }
        Ok(())
    }

    /// Tail expansion used beyond the grid.
    pub fn tail(&self) -> &TailSeries {
        &self.tail
    }
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 3 {
        return crate::quad::trapezoid(f, h);
    }
    let (body, extra) = if n % 2 == 1 { (n, 0.0) } else {
        // last interval by the cubic end correction (3/8 rule over 3 intervals)
        let k = n - 4;
        (k + 1, 3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]))
    };
    let mut s = f[0] + f[body - 1];
    for (i, v) in f[1..body - 1].iter().enumerate() {
        s += if i % 2 == 0 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0 + extra
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(theta: f64, alpha: u32, m: u32) -> KernelProfile {
        let a = MultiIndex::d1(alpha);
        let (z, r) = default_grid(theta, 1, &a, m);
        tabulate_profile(theta, 1, &a, m, z, r).unwrap()
    }

    #[test]
    fn gaussian_and_poisson_centres() {
        assert!((profile(2.0, 0, 0).value(0.0) - (4.0 * PI).powf(-0.5)).abs() < 1e-12);
        let p = profile(1.0, 0, 0);
        assert!((p.value(0.0) - 1.0 / PI).abs() < 1e-12);
        for &z in &[0.37, 1.0, 3.99, 4.01, 17.0] {
            assert!((p.value(z) - 1.0 / (PI * (1.0 + z * z))).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn stable_centre_matches_gamma_formula() {
        // P(0) = Gamma(1 + 1/theta)/pi
        let p = profile(1.5, 0, 0);
        let expect = statrs::function::gamma::gamma(1.0 + 1.0 / 1.5) / PI;
        assert!((p.value(0.0) - expect).abs() < 1e-12);
        assert!((expect - 0.28731).abs() < 1e-4);
    }

    #[test]
    fn time_derivative_of_gaussian() {
        // d_t (4 pi t)^{-1/2} at x = 0, t = 1
        let p = profile(2.0, 0, 1);
        assert!((p.value(0.0) + 0.5 * (4.0 * PI).powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn odd_derivative_vanishes_at_origin() {
        for theta in [0.5, 1.0, 1.5] {
            assert!(profile(theta, 1, 0).value(0.0).abs() < 1e-14);
            assert!(profile(theta, 3, 1).value(0.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let a = MultiIndex::d1(0);
        assert!(tabulate_profile(0.0, 1, &a, 0, 4.0, 100).is_err());
        assert!(tabulate_profile(2.5, 1, &a, 0, 4.0, 100).is_err());
        assert!(tabulate_profile(1.0, 3, &MultiIndex::zero(3), 0, 4.0, 100).is_err());
    }

    #[test]
    fn two_dimensional_poisson() {
        let a = MultiIndex::zero(2);
        let (z, r) = default_grid(1.0, 2, &a, 0);
        let p = tabulate_profile(1.0, 2, &a, 0, z, r).unwrap();
        assert!((p.value(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-10);
        let z = 2.3;
        assert!((p.value(z) - (1.0 + z * z).powf(-1.5) / (2.0 * PI)).abs() < 1e-10);
        assert!((p.mass() - 1.0).abs() < 1e-8);
    }
}
