//! Discrete free-space convolution with the band-limited semigroup weights
//! `c_k(tau, h) = (h / 2 pi) int_{|xi| < pi/h} exp(-tau |xi|^theta) e^{i k h xi} dxi`.
//!
//! These weights form an exact semigroup on the lattice `hZ` and preserve the
//! discrete mass. When the symbol is negligible at the band edge they coincide
//! with `h G(kh, tau)` and are taken from the tabulated profile.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::kernel::KernelProfile;

/// Band-edge exponent above which the weights are sampled kernel values.
const WIDE_EDGE: f64 = 40.0;

/// Weights `c_0 .. c_{kmax}` (the sequence is even in `k`).
pub fn conv_weights(g: &KernelProfile, tau: f64, h: f64, kmax: usize) -> Result<Vec<f64>> {
    let theta = g.theta;
    if tau * (std::f64::consts::PI / h).powf(theta) > WIDE_EDGE {
        return (0..=kmax).map(|k| Ok(h * g.eval(k as f64 * h, tau)?)).collect();
    }
    let m = (8 * (kmax + 1)).max(4096).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let jj = if j < m / 2 { j as f64 } else { j as f64 - m as f64 };
            let xi = 2.0 * std::f64::consts::PI * jj / (m as f64 * h);
            Complex::new((-tau * xi.abs().powf(theta)).exp(), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let alias = alias_sum(g, tau, h, m, kmax)?;
    Ok(buf[..=kmax].iter().zip(alias).map(|(c, a)| c.re / m as f64 - a).collect())
}

/// Images `sum_{j != 0} h G((k + j m) h, tau)` folded into the DFT weights by
/// the periodic sampling of the symbol. The heavy tail makes them a nearly
/// constant bias that would otherwise add mass on every step. The sum is
/// smooth in `k` on the scale of `m`, so it is evaluated at a few nodes and
/// interpolated linearly.
fn alias_sum(g: &KernelProfile, tau: f64, h: f64, m: usize, kmax: usize) -> Result<Vec<f64>> {
    const IMAGES: i64 = 200;
    const NODES: usize = 64;
    if g.theta >= 2.0 {
        return Ok(vec![0.0; kmax + 1]);
    }
    let period = m as f64 * h;
    let scale = tau.powf(1.0 / g.theta);
    // images beyond IMAGES periods: spread their mass over one period
    let far = g.tail_mass((IMAGES as f64 + 0.5) * period / scale) / m as f64;
    let at = |k: f64| -> Result<f64> {
        let mut s = far;
        for j in 1..=IMAGES {
            let jm = j as f64 * m as f64;
            s += h * (g.eval((jm + k) * h, tau)? + g.eval((jm - k) * h, tau)?);
        }
        Ok(s)
    };
    let step = (kmax as f64 / NODES as f64).max(1.0);
    let nodes: Vec<f64> = (0..=NODES).map(|i| at(i as f64 * step)).collect::<Result<_>>()?;
    Ok((0..=kmax)
        .map(|k| {
            let u = k as f64 / step;
            let i = (u.floor() as usize).min(NODES - 1);
            let r = u - i as f64;
            nodes[i] * (1.0 - r) + nodes[(i + 1).min(NODES)] * r
        })
        .collect())
}

/// Linear convolution of length-`n` data with symmetric weights, via FFT.
pub struct Convolver {
    n: usize,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
    key: Option<(f64, f64)>,
}

impl Convolver {
    pub fn new(n: usize) -> Self {
        let size = (3 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        Convolver {
            n,
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
            spectrum: Vec::new(),
            key: None,
        }
    }

    /// Install the weights for `(tau, h)` unless they are already loaded.
    pub fn load(&mut self, g: &KernelProfile, tau: f64, h: f64) -> Result<()> {
        if self.key == Some((tau, h)) {
            return Ok(());
        }
        let c = conv_weights(g, tau, h, self.n - 1)?;
        self.set_weights(&c);
        self.key = Some((tau, h));
        Ok(())
    }

    pub fn set_weights(&mut self, c: &[f64]) {
        let n = self.n;
        let mut buf = vec![Complex::new(0.0, 0.0); self.size];
        // kernel index j holds c_{j - (n-1)}
        for j in 0..(2 * n - 1) {
            let k = (j as isize - (n as isize - 1)).unsigned_abs();
            buf[j] = Complex::new(c[k], 0.0);
        }
        self.fwd.process(&mut buf);
        self.spectrum = buf;
        self.key = None;
    }

    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        assert_eq!(data.len(), self.n);
        let mut buf = vec![Complex::new(0.0, 0.0); self.size];
        for (b, &d) in buf.iter_mut().zip(data) {
            b.re = d;
        }
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf[self.n - 1..2 * self.n - 1]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let n = 37;
        let c: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + (k * k) as f64)).collect();
        let d: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let mut conv = Convolver::new(n);
        conv.set_weights(&c);
        let out = conv.apply(&d);
        for i in 0..n {
            let direct: f64 = (0..n).map(|j| d[j] * c[(i as isize - j as isize).unsigned_abs()]).sum();
            assert!((out[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_form_a_semigroup_and_keep_mass() {
        let k = Kernel::with_cache(1.0, 1, None).unwrap();
        let g = k.profile1(0, 0).unwrap();
        let h = 0.05;
        let n = 4001;
        let a = conv_weights(&g, 0.01, h, n - 1).unwrap();
        let b = conv_weights(&g, 0.02, h, n - 1).unwrap();
        let mass: f64 = a[0] + 2.0 * a[1..].iter().sum::<f64>();
        assert!((mass - 1.0).abs() < 1e-3);
        // (c(0.01) * c(0.01))_k = c(0.02)_k away from the truncation edge
        for k in [0usize, 1, 5, 40] {
            let s: f64 = (-(n as isize - 1)..(n as isize))
                .map(|j| a[j.unsigned_abs()] * a[(k as isize - j).unsigned_abs().min(n - 1)])
                .sum();
            assert!((s - b[k]).abs() < 1e-5, "k={k}: {s} vs {}", b[k]);
        }
        // wide regime reproduces sampled kernel values
        let w = conv_weights(&g, 50.0, h, 10).unwrap();
        assert!((w[3] - h * g.eval(0.15, 50.0).unwrap()).abs() < 1e-15);
    }
}
