//! Large-argument expansion of the unit-time profiles.
//!
//! Expanding `exp(-|xi|^theta)` in powers of `|xi|^theta` and transforming each
//! homogeneous term gives a series in inverse powers of `|z|`. It converges for
//! `theta < 1` (and for `|z| > 1` when `theta = 1`) and is asymptotic for
//! `1 < theta < 2`, in which case it is summed up to its smallest term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const MAX_TERMS: usize = 160;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Term {
    sign: f64,
    ln_coef: f64,
    exponent: f64,
}

/// Tail expansion `sum_n c_n |z|^{-e_n}` of one profile, with parity in `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSeries {
    terms: Vec<Term>,
    /// `true` when the underlying series converges (stop on size, not on growth).
    convergent: bool,
    /// Parity factor applied for negative `z` in 1-D (`(-1)^alpha`).
    odd: bool,
}

impl TailSeries {
    /// Series for `d_t^m d_x^alpha` of the 1-D profile (`dim = 1`), or for the
    /// radial profile `d_t^m G` in 2-D (`dim = 2`, `alpha = 0`).
    pub fn new(theta: f64, dim: usize, alpha: u32, m: u32) -> Self {
        let mut terms = Vec::new();
        if theta < 2.0 {
            for n in 0..MAX_TERMS {
                let b = (n as f64 + m as f64) * theta;
                let s = (PI * b / 2.0).sin();
                // even-integer b: |xi|^b is a polynomial symbol with no tail
                let half = b / 2.0;
                if (half - half.round()).abs() < 1e-12 {
                    continue;
                }
                // (-1)^{n+m}/n!
                let mut sign = if (n + m as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
                let mut ln_coef = -ln_gamma(n as f64 + 1.0);
                let exponent;
                match dim {
                    1 => {
                        // FT of |xi|^b is -Gamma(b+1) sin(pi b/2)/pi |z|^{-b-1}
                        sign *= -s.signum();
                        ln_coef += ln_gamma(b + 1.0) + s.abs().ln() - PI.ln();
                        // d_z^alpha z^{-b-1} = prod_{j=1..alpha}(-b-j) z^{-b-1-alpha}
                        for j in 1..=alpha {
                            let f = -b - j as f64;
                            sign *= f.signum();
                            ln_coef += f.abs().ln();
                        }
                        exponent = b + 1.0 + alpha as f64;
                    }
                    _ => {
                        // 2-D: -2^b Gamma(1+b/2)^2 sin(pi b/2)/pi^2 |z|^{-b-2}
                        sign *= -s.signum();
                        ln_coef += b * 2f64.ln() + 2.0 * ln_gamma(1.0 + b / 2.0) + s.abs().ln()
                            - 2.0 * PI.ln();
                        exponent = b + 2.0;
                    }
                }
                terms.push(Term {
                    sign,
                    ln_coef,
                    exponent,
                });
            }
        }
        TailSeries {
            terms,
            convergent: theta <= 1.0,
            odd: dim == 1 && alpha % 2 == 1,
        }
    }

    /// Sum of the series at `z` together with the magnitude of the last
    /// retained term (an error indicator).
    pub fn eval_with_error(&self, z: f64) -> (f64, f64) {
        let az = z.abs();
        if self.terms.is_empty() || az == 0.0 {
            return (0.0, 0.0);
        }
        let lz = az.ln();
        let mut sum = 0.0;
        let mut last = f64::INFINITY;
        for t in &self.terms {
            let mag = (t.ln_coef - t.exponent * lz).exp();
            if !self.convergent && mag > last {
                break;
            }
            sum += t.sign * mag;
            last = mag;
            if mag < 1e-17 * sum.abs() {
                break;
            }
        }
        let val = if z < 0.0 && self.odd { -sum } else { sum };
        (val, last)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_with_error(z).0
    }

    /// Leading decay exponent (the tail behaves like `|z|^{-exponent}`).
    pub fn leading_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.exponent)
    }

    /// `int_{z0}^inf z^k P(z) dz` for `z0 > 0`, integrated termwise.
    pub fn integral_from(&self, z0: f64, k: f64) -> f64 {
        let lz = z0.ln();
        let mut sum = 0.0;
        let mut last = f64::INFINITY;
        for t in &self.terms {
            let e = t.exponent - 1.0 - k;
            if e <= 0.0 {
                return f64::INFINITY;
            }
            let mag = (t.ln_coef - e * lz).exp() / e;
            if !self.convergent && mag > last {
                break;
            }
            sum += t.sign * mag;
            last = mag;
            if mag < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    }

    /// Relative size of the smallest retained term at `z`.
    pub fn relative_error(&self, z: f64) -> f64 {
        let (v, e) = self.eval_with_error(z);
        if v == 0.0 {
            f64::INFINITY
        } else {
            e / v.abs()
        }
    }

    /// Leading terms as `(signed coefficient, exponent)` for `z > 0`.
    pub fn power_terms(&self, count: usize) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .take(count)
            .map(|t| (t.sign * t.ln_coef.exp(), t.exponent))
            .collect()
    }
}
