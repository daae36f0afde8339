//! Declarative description of one rate study.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fit::Criterion;
use crate::error::{Error, Result};
use crate::expansion::{check_convection, ExpansionSpec};
use crate::field::{Field, Grid1D, WeightSpec};
use crate::kernel::Kernel;
use crate::semigroup::{Forcing, NonlinearSpec, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// `u_t + (-Delta)^{theta/2} u = f`.
    Linear,
    /// `u_t + (-Delta)^{theta/2} u = d_x f`.
    Convection,
    /// `u_t + (-Delta)^{theta/2} u = lambda |u|^{p-1} u`, compared with `U_n` or `U_*`.
    Nonlinear,
    /// The same equation compared with the profile built around `M_* G`.
    MassProfile,
}

/// Initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Datum {
    Indicator { a: f64, b: f64 },
    /// `amplitude exp(-((x - center)/width)^2)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Sum of two Gaussians of unit width with different weights, so `M_1 != 0`.
    Asymmetric { left: f64, right: f64, separation: f64 },
}

impl Datum {
    pub fn gaussian() -> Self {
        Datum::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = |c: f64, w: f64| (-((x - c) / w).powi(2)).exp();
        match *self {
            Datum::Indicator { a, b } => {
                if x > a && x < b {
                    1.0
                } else if x == a || x == b {
                    0.5
                } else {
                    0.0
                }
            }
            Datum::Gaussian { amplitude, center, width } => amplitude * g(center, width),
            Datum::Asymmetric { left, right, separation } => {
                left * g(-0.5 * separation, 1.0) + right * g(0.5 * separation, 1.0)
            }
        }
    }

    pub fn sample(&self, grid: Grid1D) -> Result<Field> {
        let f = match *self {
            Datum::Indicator { a, b } => Field::indicator(grid, a, b),
            _ => Field::from_fn(grid, |x| self.eval(x))?,
        };
        Ok(f)
    }
}

/// Forcing `f(x, s)`; for convection problems the solver sees `d_x f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    None,
    /// `amplitude exp(-rate s) exp(-(x/width)^2)`.
    GaussianDecay { amplitude: f64, rate: f64, width: f64 },
    /// `G_theta(x, s + 1)`.
    Kernel,
}

/// `f` or `d_x f` evaluated pointwise.
pub(crate) struct PointForcing {
    spec: ForcingSpec,
    derivative: bool,
    kernel: Option<(Arc<crate::kernel::KernelProfile>, Arc<crate::kernel::KernelProfile>)>,
}

impl PointForcing {
    pub fn new(spec: ForcingSpec, derivative: bool, kernel: &Kernel) -> Result<Self> {
        let kernel = match spec {
            ForcingSpec::Kernel => Some((kernel.profile1(0, 0)?, kernel.profile1(1, 0)?)),
            _ => None,
        };
        Ok(PointForcing { spec, derivative, kernel })
    }

    pub fn eval(&self, x: f64, s: f64) -> f64 {
        match self.spec {
            ForcingSpec::None => 0.0,
            ForcingSpec::GaussianDecay { amplitude, rate, width } => {
                let g = amplitude * (-rate * s).exp() * (-(x / width).powi(2)).exp();
                if self.derivative {
                    -2.0 * x / (width * width) * g
                } else {
                    g
                }
            }
            ForcingSpec::Kernel => {
                let (g0, g1) = self.kernel.as_ref().unwrap();
                let p = if self.derivative { g1 } else { g0 };
                p.eval(x, s + 1.0).unwrap_or(0.0)
            }
        }
    }
}

impl Forcing for PointForcing {
    fn sample(&self, grid: &Grid1D, s: f64) -> Result<Vec<f64>> {
        Ok(grid.points().map(|x| self.eval(x, s)).collect())
    }
}

/// Geometric sample times `start .. end`, `per_decade` per factor of ten.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub start: f64,
    pub end: f64,
    pub per_decade: u32,
}

impl Ladder {
    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0 && self.end >= self.start) || self.per_decade == 0 {
            return Err(Error::NoSampleTimes);
        }
        let decades = (self.end / self.start).log10();
        let n = (decades * self.per_decade as f64).round() as usize;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    self.end
                } else {
                    self.start * 10f64.powf(i as f64 / self.per_decade as f64)
                }
            })
            .collect())
    }
}

/// Profile the solution is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// Full `w` (or `z` for convection).
    Full,
    /// `w` restricted to `|alpha| <= max_alpha`.
    Truncated { max_alpha: u32 },
    /// `z` without the forcing-gradient terms.
    Stripped,
    /// `U_n` of the nonlinear chain.
    Chain { n: usize },
    /// The time-independent limit `U_*`.
    Star,
    /// The profile around `M_* G`.
    Mass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub problem: ProblemKind,
    pub theta: f64,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(rename = "K")]
    pub k: f64,
    /// Lebesgue exponent; `null` or absent in JSON stands for infinity.
    #[serde(default = "inf", with = "q_serde")]
    pub q: f64,
    #[serde(default)]
    pub ell: f64,
    pub datum: Datum,
    #[serde(default = "no_forcing")]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub nonlinear: Option<NonlinearSpec>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    pub ladder: Ladder,
    pub profile: ProfileKind,
    #[serde(default)]
    pub criterion: Criterion,
    /// Overrides the exponent derived from the problem.
    #[serde(default)]
    pub predicted_exponent: Option<f64>,
}

fn one() -> usize {
    1
}
fn inf() -> f64 {
    f64::INFINITY
}
fn no_forcing() -> ForcingSpec {
    ForcingSpec::None
}

mod q_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(q)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Vec<Self>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse = |m: String| Error::Parse { path: path.to_path_buf(), message: m };
        // a single config or a list of them
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        if value.is_array() {
            serde_json::from_value(value).map_err(|e| parse(e.to_string()))
        } else {
            Ok(vec![serde_json::from_value(value).map_err(|e| parse(e.to_string()))?])
        }
    }

    pub fn spec(&self) -> Result<ExpansionSpec> {
        ExpansionSpec::new(self.k, self.theta, self.dim)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = self.solver.clone().unwrap_or_else(|| SolverConfig::for_theta(self.theta));
        c.theta = self.theta;
        c.dim = self.dim;
        c
    }

    /// `(N/theta)(1 - 1/q) - ell/theta`, the part of every exponent fixed by the norm.
    pub fn norm_shift(&self) -> f64 {
        let n = self.dim as f64;
        n / self.theta * (1.0 - 1.0 / self.q) - self.ell / self.theta
    }

    /// Decay exponent the measured error is expected to beat (or match).
    pub fn predicted(&self) -> Result<f64> {
        if let Some(p) = self.predicted_exponent {
            return Ok(p);
        }
        let th = self.theta;
        let base = self.norm_shift();
        let e = match (self.problem, self.profile) {
            (ProblemKind::Linear | ProblemKind::Convection, ProfileKind::Full) => self.k / th,
            // first omitted term
            (ProblemKind::Linear, ProfileKind::Truncated { max_alpha }) => (max_alpha + 1) as f64 / th,
            (ProblemKind::Convection, ProfileKind::Stripped) => 1.0 / th,
            (ProblemKind::Nonlinear, ProfileKind::Chain { n }) => {
                let ap = self.nl()?.a_p(th, self.dim);
                (self.k / th).min((n + 1) as f64 * (ap - 1.0))
            }
            (ProblemKind::Nonlinear, ProfileKind::Star) => self.k / th,
            (ProblemKind::MassProfile, ProfileKind::Mass) => {
                let nl = self.nl()?;
                let ap = nl.a_p(th, self.dim);
                // t^{-K/theta} int_1^t s^{K/theta - A_p} h_sigma(s) ds, term by term
                [ap - 1.0 - nl.sigma, 1.0, 1.0 / th]
                    .iter()
                    .map(|e| (self.k / th).min(ap + e - 1.0))
                    .fold(self.k / th, f64::min)
            }
            (p, k) => {
                return Err(Error::InvalidParameter(format!("profile {k:?} does not apply to {p:?} problems")))
            }
        };
        Ok(base + e)
    }

    fn nl(&self) -> Result<NonlinearSpec> {
        self.nonlinear
            .ok_or_else(|| Error::InvalidParameter(format!("experiment `{}` needs a nonlinearity", self.id)))
    }

    /// Reject configurations outside the hypotheses of the statement they test.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::InvalidParameter(format!("bad experiment id `{}`", self.id)));
        }
        let spec = self.spec()?;
        let w = WeightSpec::new(self.q, self.ell, self.k)?;
        self.ladder.times()?;
        self.predicted()?;
        let n = self.dim as f64;
        match self.problem {
            ProblemKind::Linear => w.check_ell_bound(self.theta, self.dim)?,
            ProblemKind::Convection => {
                check_convection(&spec)?;
                w.check_ell_bound(self.theta, self.dim)?;
            }
            ProblemKind::Nonlinear | ProblemKind::MassProfile => {
                let nl = self.nl()?;
                nl.validate(self.theta, self.dim)?;
                if !matches!(self.forcing, ForcingSpec::None) {
                    return Err(Error::InvalidParameter("nonlinear problems take no forcing".into()));
                }
                if self.problem == ProblemKind::Nonlinear && !(nl.p * (n + self.theta) > self.k + n) {
                    return Err(Error::Constraint(format!(
                        "p (N + theta) = {} must exceed K + N = {}",
                        nl.p * (n + self.theta),
                        self.k + n
                    )));
                }
                if self.problem == ProblemKind::MassProfile && !(n * (nl.p + self.theta) > n + self.k) {
                    return Err(Error::Constraint(format!(
                        "N (p + theta) = {} must exceed N + K = {}",
                        n * (nl.p + self.theta),
                        n + self.k
                    )));
                }
                w.check_ell_bound(self.theta, self.dim)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_is_geometric_and_hits_end() {
        let t = Ladder { start: 10.0, end: 1000.0, per_decade: 4 }.times().unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t[8], 1000.0);
        assert!((t[4] - 100.0).abs() < 1e-9);
        assert!(matches!(
            Ladder { start: 10.0, end: 1.0, per_decade: 4 }.times(),
            Err(Error::NoSampleTimes)
        ));
    }

    #[test]
    fn q_round_trips_through_json() {
        let c = super::super::presets::preset("linear-full").unwrap().remove(0);
        let s = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.q, c.q);
        let mut d = c.clone();
        d.q = f64::INFINITY;
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert!(back.q.is_infinite());
    }

    #[test]
    fn derivative_forcing_matches_difference() {
        let k = Kernel::new(1.5, 1).unwrap();
        let spec = ForcingSpec::GaussianDecay { amplitude: 1.0, rate: 1.0, width: 1.3 };
        let f = PointForcing::new(spec, false, &k).unwrap();
        let df = PointForcing::new(spec, true, &k).unwrap();
        let h = 1e-5;
        let fd = (f.eval(0.4 + h, 0.7) - f.eval(0.4 - h, 0.7)) / (2.0 * h);
        assert!((fd - df.eval(0.4, 0.7)).abs() < 1e-8);
    }
}
