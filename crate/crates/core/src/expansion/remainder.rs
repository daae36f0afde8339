//! Taylor remainders of the kernel in space (`S`), time (`T`) and both (`R`),
//! each in the difference form and the integral-remainder form.

use serde::{Deserialize, Serialize};

use super::{ExpansionSpec, int_part};
use crate::error::{Error, Result};
use crate::index::factorial;
use crate::kernel::Kernel;
use crate::quad::GaussLegendre;

/// Nodes of the `tau` rule in the integral forms.
const TAU_NODES: usize = 32;

/// Both forms of `S^m_ell(x,y,t)`, `T(x,y,t,s)` and `R(x,y,t,s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderValues {
    pub s_taylor: f64,
    pub s_integral: f64,
    pub t_taylor: f64,
    pub t_integral: f64,
    /// `G(x-y,t-s)` minus the double Taylor sum.
    pub r_direct: f64,
    /// `T + sum_m (-1)^m/m! S^m_K s^m`, from the integral forms.
    pub r_composed: f64,
}

impl RemainderValues {
    /// Largest disagreement between paired forms.
    pub fn disagreement(&self) -> f64 {
        (self.s_taylor - self.s_integral)
            .abs()
            .max((self.t_taylor - self.t_integral).abs())
            .max((self.r_direct - self.r_composed).abs())
    }

    pub fn s(&self) -> f64 {
        self.s_taylor
    }

    pub fn t(&self) -> f64 {
        self.t_taylor
    }

    pub fn r(&self) -> f64 {
        self.r_direct
    }
}

/// Evaluate all forms at `(x, y, t, s)` for `S^m_ell`; `T` and `R` use the
/// `K` and `K_theta` of `spec`. Requires `0 <= s < t`, `0 <= ell <= K`.
pub fn evaluate_remainders(
    kernel: &Kernel,
    spec: &ExpansionSpec,
    x: f64,
    y: f64,
    t: f64,
    s: f64,
    ell: f64,
    m: u32,
) -> Result<RemainderValues> {
    if !(0.0 <= s && s < t) {
        return Err(Error::InvalidParameter(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    if !(0.0 <= ell && ell <= spec.k + 1e-12) {
        return Err(Error::InvalidParameter(format!("need 0 <= ell <= K, got ell = {ell}")));
    }
    let gl = GaussLegendre::new(TAU_NODES);
    let d = |a: u32, m: u32, x: f64, t: f64| -> Result<f64> { kernel.profile1(a, m)?.eval(x, t) };

    let s_pair = |l: u32, m: u32| -> Result<(f64, f64)> {
        let mut taylor = d(0, m, x - y, t)?;
        for a in 0..=l {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            taylor -= sign / factorial(a) * d(a, m, x, t)? * y.powi(a as i32);
        }
        let p = kernel.profile1(l + 1, m)?;
        let scale = (-y).powi(l as i32 + 1) / factorial(l);
        let integral = scale
            * gl.integrate(0.0, 1.0, |tau| {
                (1.0 - tau).powi(l as i32) * p.eval(x - tau * y, t).unwrap_or(f64::NAN)
            });
        Ok((taylor, integral))
    };

    let (s_taylor, s_integral) = s_pair(int_part(ell), m)?;

    let kt = spec.k_theta();
    let mut t_taylor = d(0, 0, x - y, t - s)?;
    for mm in 0..=kt {
        let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
        t_taylor -= sign / factorial(mm) * d(0, mm, x - y, t)? * s.powi(mm as i32);
    }
    let pt = kernel.profile1(0, kt + 1)?;
    let t_integral = (-s).powi(kt as i32 + 1) / factorial(kt)
        * gl.integrate(0.0, 1.0, |tau| {
            (1.0 - tau).powi(kt as i32) * pt.eval(x - y, t - tau * s).unwrap_or(f64::NAN)
        });

    let k = spec.k_int();
    let mut r_direct = d(0, 0, x - y, t - s)?;
    for mm in 0..=kt {
        for a in 0..=k {
            let sign = if (a + mm) % 2 == 0 { 1.0 } else { -1.0 };
            r_direct -= sign / (factorial(a) * factorial(mm))
                * d(a, mm, x, t)?
                * y.powi(a as i32)
                * s.powi(mm as i32);
        }
    }
    let mut r_composed = t_integral;
    for mm in 0..=kt {
        let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
        r_composed += sign / factorial(mm) * s_pair(k, mm)?.1 * s.powi(mm as i32);
    }

    let v = RemainderValues { s_taylor, s_integral, t_taylor, t_integral, r_direct, r_composed };
    if !v.disagreement().is_finite() {
        return Err(Error::Evaluation(format!("non-finite remainder at ({x}, {y}, {t}, {s})")));
    }
    Ok(v)
}

/// [`evaluate_remainders`] with a check that the paired forms agree to `tol`.
#[allow(clippy::too_many_arguments)]
pub fn remainder_kernels(
    kernel: &Kernel,
    spec: &ExpansionSpec,
    x: f64,
    y: f64,
    t: f64,
    s: f64,
    ell: f64,
    m: u32,
    tol: f64,
) -> Result<RemainderValues> {
    let v = evaluate_remainders(kernel, spec, x, y, t, s, ell, m)?;
    let gap = v.disagreement();
    if gap > tol {
        return Err(Error::FormDisagreement(format!(
            "remainder forms differ by {gap:.3e} at (x, y, t, s) = ({x}, {y}, {t}, {s})"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_zeros() {
        let k = Kernel::new(1.0, 1).unwrap();
        let spec = ExpansionSpec::new(1.0, 1.0, 1).unwrap();
        let v = evaluate_remainders(&k, &spec, 0.7, 0.0, 2.0, 0.0, 1.0, 1).unwrap();
        assert_eq!(v.s_taylor, 0.0);
        assert_eq!(v.s_integral, 0.0);
        assert_eq!(v.t_taylor, 0.0);
        assert_eq!(v.t_integral, 0.0);
    }

    #[test]
    fn forms_agree_at_sample_point() {
        let k = Kernel::new(1.0, 1).unwrap();
        let spec = ExpansionSpec::new(1.0, 1.0, 1).unwrap();
        let v = remainder_kernels(&k, &spec, 0.7, 0.3, 2.0, 0.5, 1.0, 0, 1e-8).unwrap();
        assert!(v.r().abs() > 1e-6);
    }
}
