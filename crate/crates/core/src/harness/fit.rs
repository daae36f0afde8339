//! Log-log slope fits and the verdicts built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `ln error` against `ln t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFit {
    Slope { slope: f64, residual: f64 },
    /// Some error was not positive: the profile matched to round-off.
    Saturated,
}

impl RateFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            RateFit::Slope { slope, .. } => Some(*slope),
            RateFit::Saturated => None,
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            RateFit::Slope { residual, .. } => Some(*residual),
            RateFit::Saturated => None,
        }
    }
}

/// Slope of `ln errors` against `ln times` and the RMS deviation from the line.
pub fn fit_rate(times: &[f64], errors: &[f64]) -> Result<RateFit> {
    if times.is_empty() {
        return Err(Error::NoSampleTimes);
    }
    if times.len() != errors.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times but {} errors",
            times.len(),
            errors.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::InvalidParameter("a slope needs at least two times".into()));
    }
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("sample times must be positive".into()));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Ok(RateFit::Saturated);
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("sample times must not all coincide".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    Ok(RateFit::Slope {
        slope,
        residual: (ss / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Saturated,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Saturated => "saturated",
        }
    }

    pub(crate) fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// What a rate study asserts about its error ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// Fitted slope at most `-predicted + tolerance`.
    Predicted { tolerance: f64 },
    /// Fitted slope at most `max`.
    SlopeAtMost { max: f64 },
    /// Fitted slope within `tolerance` of `target`.
    SlopeNear { target: f64, tolerance: f64 },
    /// Scaled error strictly decreasing over the final `decades`.
    ScaledDecreasing { decades: f64 },
    /// Scaled error non-increasing up to a factor `1 + slack` over the final `decades`.
    ScaledBounded { decades: f64, slack: f64 },
}

impl Default for Criterion {
    fn default() -> Self {
        Criterion::Predicted { tolerance: 0.15 }
    }
}

/// Verdict and signed margin (positive means passing with room to spare).
pub fn judge(criterion: &Criterion, fit: &RateFit, predicted: f64, times: &[f64], scaled: &[f64]) -> (Verdict, f64) {
    if let Criterion::ScaledDecreasing { decades } | Criterion::ScaledBounded { decades, .. } = *criterion {
        let t_end = times.last().copied().unwrap_or(0.0);
        let tail: Vec<f64> = times
            .iter()
            .zip(scaled)
            .filter(|(t, _)| **t >= t_end * 10f64.powf(-decades) * (1.0 - 1e-12))
            .map(|(_, s)| *s)
            .collect();
        if tail.len() < 2 {
            return (Verdict::Fail, -1.0);
        }
        if tail.iter().all(|s| *s == 0.0) {
            return (Verdict::Saturated, 0.0);
        }
        let slack = match *criterion {
            Criterion::ScaledBounded { slack, .. } => slack,
            _ => 0.0,
        };
        // worst ratio of a later value to any earlier one
        let mut worst = 0.0f64;
        let mut lowest = tail[0];
        for &s in &tail[1..] {
            worst = worst.max(s / lowest);
            lowest = lowest.min(s);
        }
        let margin = 1.0 + slack - worst;
        let ok = if slack == 0.0 { worst < 1.0 } else { worst <= 1.0 + slack };
        return (Verdict::from_bool(ok), margin);
    }
    let slope = match fit.slope() {
        Some(s) => s,
        None => return (Verdict::Saturated, 0.0),
    };
    let margin = match *criterion {
        Criterion::Predicted { tolerance } => -predicted + tolerance - slope,
        Criterion::SlopeAtMost { max } => max - slope,
        Criterion::SlopeNear { target, tolerance } => tolerance - (slope - target).abs(),
        _ => unreachable!(),
    };
    (Verdict::from_bool(margin >= 0.0), margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn exact_power_law() {
        let t = geometric(1.0, 100.0, 9);
        let e: Vec<f64> = t.iter().map(|t| 3.0 * t.powi(-2)).collect();
        let f = fit_rate(&t, &e).unwrap();
        assert!((f.slope().unwrap() + 2.0).abs() < 1e-6);
        assert!(f.residual().unwrap() < 1e-12);
    }

    #[test]
    fn constant_errors() {
        let t = geometric(1.0, 1000.0, 7);
        let f = fit_rate(&t, &[0.25; 7]).unwrap();
        assert!(f.slope().unwrap().abs() < 1e-9);
    }

    #[test]
    fn perturbed_power_law() {
        let t = geometric(10.0, 1000.0, 9);
        let e: Vec<f64> = t.iter().map(|t| t.powf(-1.5) * (1.0 + 0.1 / t)).collect();
        let s = fit_rate(&t, &e).unwrap().slope().unwrap();
        assert!((s + 1.5).abs() < 0.02, "{s}");
    }

    #[test]
    fn non_positive_errors_saturate() {
        let t = [1.0, 10.0, 100.0];
        assert_eq!(fit_rate(&t, &[1e-3, 0.0, 1e-5]).unwrap(), RateFit::Saturated);
        let (v, _) = judge(&Criterion::default(), &RateFit::Saturated, 1.0, &t, &[1.0, 0.0, 1.0]);
        assert_eq!(v, Verdict::Saturated);
        assert!(v.passed());
    }

    #[test]
    fn empty_ladder() {
        assert!(matches!(fit_rate(&[], &[]), Err(Error::NoSampleTimes)));
    }

    #[test]
    fn scaled_trend_checks() {
        let t = geometric(1.0, 1000.0, 13);
        let down: Vec<f64> = t.iter().map(|t| t.powf(-0.2)).collect();
        let c = Criterion::ScaledDecreasing { decades: 1.0 };
        assert_eq!(judge(&c, &RateFit::Saturated, 0.0, &t, &down).0, Verdict::Pass);
        let mut bump = down.clone();
        bump[11] *= 1.15;
        assert_eq!(judge(&c, &RateFit::Saturated, 0.0, &t, &bump).0, Verdict::Fail);
        let b = Criterion::ScaledBounded { decades: 1.0, slack: 0.05 };
        assert_eq!(judge(&b, &RateFit::Saturated, 0.0, &t, &bump).0, Verdict::Pass);
    }
}
