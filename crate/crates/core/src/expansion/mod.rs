//! Asymptotic profiles: linear combinations of
//! `g_{alpha,m}(x,t) = (-1)^{|alpha|+m}/(alpha! m!) (d_t^m d_x^alpha G)(x, t+1)`
//! with moment coefficients, plus the Taylor remainder kernels.
//!
//! Coefficients can be built from sampled fields (the literal formulas) or from
//! a solver run's discrete source history. The latter uses exactly the moments
//! the stepper fed into the solution, so `u - w` is the remainder of the scheme
//! itself and not polluted by a second time quadrature.

mod nonlinear;
mod remainder;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use nonlinear::{build_u_chain, build_v, extrapolate_integral, TailFit, UChain, VProfile};
pub use remainder::{evaluate_remainders, remainder_kernels, RemainderValues};

use crate::error::{Error, Result};
use crate::field::{moment, time_weighted_moment_integral, Field, Grid1D, SpaceTimeField};
use crate::index::{factorial, MultiIndex};
use crate::kernel::{Kernel, KernelProfile};
use crate::semigroup::{SourceHistory, TRACKED};

/// Floor with a little slack so that `K/theta` landing on an integer in exact
/// arithmetic is not pushed below it by rounding.
pub(crate) fn int_part(v: f64) -> u32 {
    (v + 1e-9).floor().max(0.0) as u32
}

/// Moment order `K` and the index set `{(alpha, m): |alpha| <= [K], m <= K_theta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    #[serde(rename = "K")]
    pub k: f64,
    pub theta: f64,
    pub dim: usize,
}

impl ExpansionSpec {
    pub fn new(k: f64, theta: f64, dim: usize) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("K must be >= 0, got {k}")));
        }
        crate::kernel::validate_theta_dim(theta, dim)?;
        Ok(ExpansionSpec { k, theta, dim })
    }

    /// `[K]`, the largest admissible `|alpha|`.
    pub fn k_int(&self) -> u32 {
        int_part(self.k)
    }

    /// `K_theta = [K/theta]`.
    pub fn k_theta(&self) -> u32 {
        int_part(self.k / self.theta)
    }

    /// All `(alpha, m)`, ordered by `m` then `alpha`.
    pub fn index_set(&self) -> Vec<(MultiIndex, u32)> {
        let alphas = MultiIndex::all_up_to(self.dim, self.k_int());
        (0..=self.k_theta())
            .flat_map(|m| alphas.iter().map(move |a| (a.clone(), m)))
            .collect()
    }
}

/// `(-1)^{|alpha|+m} / (alpha! m!)`
pub fn g_prefactor(alpha: &MultiIndex, m: u32) -> f64 {
    let sign = if (alpha.order() + m).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (alpha.factorial() * factorial(m))
}

/// `g_{alpha,m}(x,t)` for a 1-D `x`. Builds (or loads from the cache
/// directory) the needed profile; use [`Basis`] for repeated evaluation.
pub fn g_term(alpha: u32, m: u32, x: f64, t: f64, theta: f64, dim: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let kernel = Kernel::new(theta, dim)?;
    let a = MultiIndex(vec![alpha; 1]);
    if dim != 1 {
        return Err(Error::InvalidParameter("g_term evaluates 1-D positions".into()));
    }
    let p = kernel.profile(&a, m)?;
    Ok(g_prefactor(&a, m) * p.eval(x, t + 1.0)?)
}

/// One coefficient of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub alpha: MultiIndex,
    pub m: u32,
    pub value: f64,
}

/// Coefficients of a profile at one time `t` (they may depend on `t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    pub t: f64,
    pub terms: Vec<Coefficient>,
}

impl ExpansionCoefficients {
    pub fn get(&self, alpha: u32, m: u32) -> Option<f64> {
        self.terms
            .iter()
            .find(|c| c.alpha.order() == alpha && c.m == m)
            .map(|c| c.value)
    }

    /// Keep only the terms accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Coefficient) -> bool) -> Self {
        ExpansionCoefficients {
            t: self.t,
            terms: self.terms.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    /// Termwise sum; terms are matched on `(alpha, m)`.
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for c in &other.terms {
            match out.terms.iter_mut().find(|d| d.alpha == c.alpha && d.m == c.m) {
                Some(d) => d.value += c.value,
                None => out.terms.push(c.clone()),
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.terms {
            c.value *= s;
        }
        out
    }
}

/// Coefficients `A_alpha + int_0^t (s+1)^m B_alpha(s) ds` over the index set
/// of `spec`, from the moment functions supplied.
pub fn coefficients_from(
    spec: &ExpansionSpec,
    t: f64,
    phi_moment: impl Fn(u32) -> f64,
    source_integral: impl Fn(u32, u32) -> Result<f64>,
) -> Result<ExpansionCoefficients> {
    if spec.dim != 1 {
        return Err(Error::InvalidParameter("moment coefficients are 1-D".into()));
    }
    let mut terms = Vec::new();
    for (alpha, m) in spec.index_set() {
        let a = alpha.order();
        terms.push(Coefficient {
            value: phi_moment(a) + source_integral(a, m)?,
            alpha,
            m,
        });
    }
    Ok(ExpansionCoefficients { t, terms })
}

/// Coefficients of `w` from a solver's moments: `M_alpha(phi)` as seen by the
/// solver plus the history integral of the recorded source moments.
pub fn coefficients_from_history(
    spec: &ExpansionSpec,
    t: f64,
    phi_moments: &[f64; TRACKED],
    history: &SourceHistory,
) -> Result<ExpansionCoefficients> {
    check_tracked(spec.k_int())?;
    coefficients_from(spec, t, |a| phi_moments[a as usize], |a, m| Ok(history.integral(a as usize, m, t)))
}

fn check_tracked(order: u32) -> Result<()> {
    if order as usize >= TRACKED {
        return Err(Error::InvalidParameter(format!(
            "moments up to order {} are tracked, {order} requested",
            TRACKED - 1
        )));
    }
    Ok(())
}

/// Kernel-derivative profiles for one index set, evaluated on demand.
#[derive(Clone)]
pub struct Basis {
    kernel: Arc<Kernel>,
    profiles: Vec<((u32, u32), Arc<KernelProfile>)>,
}

impl Basis {
    pub fn new(kernel: Arc<Kernel>) -> Self {
        Basis { kernel, profiles: Vec::new() }
    }

    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    /// Tabulate (or fetch) every profile `coeffs` refers to.
    pub fn prepare(&mut self, coeffs: &ExpansionCoefficients) -> Result<()> {
        for c in &coeffs.terms {
            self.profile(c.alpha.order(), c.m)?;
        }
        Ok(())
    }

    fn profile(&mut self, alpha: u32, m: u32) -> Result<Arc<KernelProfile>> {
        if let Some((_, p)) = self.profiles.iter().find(|(k, _)| *k == (alpha, m)) {
            return Ok(p.clone());
        }
        let p = self.kernel.profile1(alpha, m)?;
        self.profiles.push(((alpha, m), p.clone()));
        Ok(p)
    }

    fn cached(&self, alpha: u32, m: u32) -> Result<&Arc<KernelProfile>> {
        self.profiles
            .iter()
            .find(|(k, _)| *k == (alpha, m))
            .map(|(_, p)| p)
            .ok_or_else(|| Error::Evaluation(format!("profile ({alpha}, {m}) not prepared")))
    }

    /// `g_{alpha,m}(x,t)`.
    pub fn g(&mut self, alpha: u32, m: u32, x: f64, t: f64) -> Result<f64> {
        let p = self.profile(alpha, m)?;
        Ok(g_prefactor(&MultiIndex::d1(alpha), m) * p.eval(x, t + 1.0)?)
    }

    /// `sum_c c.value g_{c.alpha, c.m}(x, t)` at the points of `grid`.
    /// `coeffs` must have been passed to [`Basis::prepare`].
    pub fn values_on(&self, coeffs: &ExpansionCoefficients, points: &[f64], t: f64) -> Result<Vec<f64>> {
        let s = t + 1.0;
        let mut terms = Vec::with_capacity(coeffs.terms.len());
        for c in &coeffs.terms {
            let a = c.alpha.order();
            let p = self.cached(a, c.m)?;
            terms.push((c.value * g_prefactor(&c.alpha, c.m) * p.scale(s), p.clone()));
        }
        let inv = s.powf(-1.0 / self.kernel.theta());
        Ok(points
            .par_iter()
            .map(|&x| terms.iter().map(|(w, p)| w * p.value(x * inv)).sum())
            .collect())
    }

    pub fn field(&mut self, coeffs: &ExpansionCoefficients, grid: Grid1D, t: f64) -> Result<Field> {
        self.prepare(coeffs)?;
        let pts: Vec<f64> = grid.points().collect();
        Field::new(grid, self.values_on(coeffs, &pts, t)?)
    }
}

/// `w(., t)` on `grid` from sampled data: `M_alpha(phi)` and the trapezoid
/// time integrals of the forcing moments (the literal formula).
pub fn build_w(
    basis: &mut Basis,
    phi: &Field,
    f: Option<&SpaceTimeField>,
    spec: &ExpansionSpec,
    t: f64,
    grid: Grid1D,
) -> Result<(Field, ExpansionCoefficients)> {
    let coeffs = w_coefficients(phi, f, spec, t)?;
    Ok((basis.field(&coeffs, grid, t)?, coeffs))
}

pub fn w_coefficients(
    phi: &Field,
    f: Option<&SpaceTimeField>,
    spec: &ExpansionSpec,
    t: f64,
) -> Result<ExpansionCoefficients> {
    coefficients_from(
        spec,
        t,
        |a| moment(phi, a),
        |a, m| match f {
            Some(f) => time_weighted_moment_integral(f, a, m, t),
            None => Ok(0.0),
        },
    )
}

/// `z(., t)` for `u_t + (-Delta)^{theta/2} u = d_x f` from sampled data: the
/// forcing moments multiply `d_x g_{alpha,m} = -(alpha+1) g_{alpha+1,m}`.
pub fn build_z(
    basis: &mut Basis,
    phi: &Field,
    f: Option<&SpaceTimeField>,
    spec: &ExpansionSpec,
    t: f64,
    grid: Grid1D,
) -> Result<(Field, ExpansionCoefficients)> {
    check_convection(spec)?;
    let phi_part = w_coefficients(phi, None, spec, t)?;
    let coeffs = match f {
        None => phi_part,
        Some(f) => {
            let forced = coefficients_from(spec, t, |_| 0.0, |a, m| time_weighted_moment_integral(f, a, m, t))?;
            phi_part.plus(&shift_gradient(&forced))
        }
    };
    Ok((basis.field(&coeffs, grid, t)?, coeffs))
}

/// Rewrite `sum C_{alpha,m} d_x g_{alpha,m}` as `sum -(alpha+1) C_{alpha,m} g_{alpha+1,m}`.
pub fn shift_gradient(c: &ExpansionCoefficients) -> ExpansionCoefficients {
    ExpansionCoefficients {
        t: c.t,
        terms: c
            .terms
            .iter()
            .map(|c| {
                let a = c.alpha.order();
                Coefficient {
                    alpha: MultiIndex::d1(a + 1),
                    m: c.m,
                    value: -((a + 1) as f64) * c.value,
                }
            })
            .collect(),
    }
}

/// Convection profiles are stated for `1 < theta < 2` only.
pub fn check_convection(spec: &ExpansionSpec) -> Result<()> {
    if !(spec.theta > 1.0 && spec.theta < 2.0) {
        return Err(Error::Constraint(format!(
            "convection profile needs 1 < theta < 2, got theta = {}",
            spec.theta
        )));
    }
    Ok(())
}

/// Coefficients of `z` from a convection run whose recorded source is `S = d_x f`.
/// Since `M_{alpha+1}(d_x f) = -(alpha+1) M_alpha(f)`, the gradient terms of `z`
/// are the `alpha = 1..=[K]+1` terms of `w` built on `S`. With `stripped` the
/// forcing terms are dropped and only the `phi` part remains.
pub fn z_coefficients_from_history(
    spec: &ExpansionSpec,
    t: f64,
    phi_moments: &[f64; TRACKED],
    history: &SourceHistory,
    stripped: bool,
) -> Result<ExpansionCoefficients> {
    check_convection(spec)?;
    check_tracked(spec.k_int() + 1)?;
    let phi_part = coefficients_from(spec, t, |a| phi_moments[a as usize], |_, _| Ok(0.0))?;
    if stripped {
        return Ok(phi_part);
    }
    let mut grad = Vec::new();
    for m in 0..=spec.k_theta() {
        for a in 1..=spec.k_int() + 1 {
            grad.push(Coefficient {
                alpha: MultiIndex::d1(a),
                m,
                value: history.integral(a as usize, m, t),
            });
        }
    }
    Ok(phi_part.plus(&ExpansionCoefficients { t, terms: grad }))
}
