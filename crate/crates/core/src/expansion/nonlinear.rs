//! Profiles of the semilinear problem: the chain `U_0, U_1, ...`, the
//! time-independent `U_*`, and the profile `v` built around `M_* G`.

use serde::{Deserialize, Serialize};

use super::{coefficients_from, coefficients_from_history, check_tracked, Basis, ExpansionCoefficients, ExpansionSpec};
use crate::error::{Error, Result};
use crate::field::{Field, SpaceTimeField};
use crate::semigroup::{FnForcing, Level, NonlinearRun, NonlinearSpec, Solver, SourceHistory, TRACKED};

/// Power-law fit `A (s+1)^{-k}` of an integrand over its last decade, and the
/// closed-form integral of the fit beyond the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Fitted decay exponent `-k` of `|integrand|`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Integral over the recorded range.
    pub finite: f64,
    /// Extrapolated integral beyond the recorded range.
    pub tail: f64,
}

impl TailFit {
    pub fn total(&self) -> f64 {
        self.finite + self.tail
    }
}

/// Least-squares slope and intercept of `ln|v|` against `ln(s+1)`.
fn loglog_fit(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(s, v)| ((s + 1.0).ln(), v.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `int_0^infinity (s+1)^m M_alpha(S(s)) ds` from a recorded history: the
/// recorded integral plus the integral of a power law fitted on the last
/// decade of `s+1`. Fails when the fitted exponent is `>= -1.1`. A series that
/// stays at round-off relative to the mass series has no tail.
pub fn extrapolate_integral(history: &SourceHistory, alpha: usize, m: u32) -> Result<TailFit> {
    let end = match history.s.last() {
        Some(&s) => s + 0.5 * history.dt[history.len() - 1],
        None => return Err(Error::TailExtrapolation("empty source history".into())),
    };
    let finite = history.integral(alpha, m, end);
    let samples: Vec<(f64, f64)> = history
        .series(alpha)
        .into_iter()
        .filter(|(s, _)| s + 1.0 >= 0.1 * (end + 1.0))
        .map(|(s, v)| (s, (s + 1.0).powi(m as i32) * v))
        .collect();
    // moments that vanish by symmetry come out as round-off, which has no tail
    let mass = history.series(0);
    let noise = |s: f64| {
        let m0 = mass.iter().fold(0.0f64, |a, (_, v)| a.max(v.abs()));
        1e-11 * m0 * (s + 1.0).powi(m as i32 + 2 * alpha as i32)
    };
    if samples.iter().all(|(s, v)| v.abs() <= noise(*s)) {
        return Ok(TailFit { exponent: f64::NEG_INFINITY, amplitude: 0.0, finite, tail: 0.0 });
    }
    let (slope, icpt) = loglog_fit(&samples)
        .ok_or_else(|| Error::TailExtrapolation("too few nonzero samples in the last decade".into()))?;
    if slope >= -1.1 {
        return Err(Error::TailExtrapolation(format!(
            "(s+1)^{m} M_{alpha} decays like (s+1)^{slope:.3}, not integrable"
        )));
    }
    let sign = samples.last().unwrap().1.signum();
    let amplitude = sign * icpt.exp();
    let tail = amplitude * (end + 1.0).powf(slope + 1.0) / (-slope - 1.0);
    Ok(TailFit { exponent: slope, amplitude, finite, tail })
}

/// Trajectories of `u` and of the profiles `U_0..=U_n` (and `U_*` when its
/// constants could be extrapolated), all on the solver's output windows.
#[derive(Debug, Clone)]
pub struct UChain {
    pub u: SpaceTimeField,
    pub profiles: Vec<SpaceTimeField>,
    pub u_star: Option<SpaceTimeField>,
    /// Constants `M_{alpha,m}` of `U_*`.
    pub star_coefficients: Option<ExpansionCoefficients>,
    /// Why `U_*` is missing, if it is.
    pub star_error: Option<String>,
    /// Whether `p > 1 + (2K + theta)/N` holds.
    pub gap_condition: bool,
    /// History of `F(u)`.
    pub history: SourceHistory,
    pub phi_moments: [f64; TRACKED],
}

/// Sum of the `phi` part and the history part of a level's coefficients.
fn level_coefficients(
    spec: &ExpansionSpec,
    t: f64,
    n: usize,
    phi_moments: &[f64; TRACKED],
    levels: &[Level],
) -> Result<ExpansionCoefficients> {
    let zero = [0.0; TRACKED];
    let pm = if n == 0 { phi_moments } else { &zero };
    coefficients_from_history(spec, t, pm, &levels[n].history)
}

/// `U_j(x, s)` at `points`, where level 0 holds `u` and level `j >= 1` holds
/// the Duhamel term `D_j` of `F(U_{j-1})`:
/// `U_0 = sum C_0 g`, `U_j = U_0 + D_j - sum C_j g`.
fn profile_values(
    basis: &Basis,
    spec: &ExpansionSpec,
    j: usize,
    s: f64,
    points: &[f64],
    states: &[Vec<f64>],
    phi_moments: &[f64; TRACKED],
    levels: &[Level],
) -> Result<Vec<f64>> {
    let c0 = level_coefficients(spec, s, 0, phi_moments, levels)?;
    let mut v = basis.values_on(&c0, points, s)?;
    if j > 0 {
        let cj = level_coefficients(spec, s, j, phi_moments, levels)?;
        let gj = basis.values_on(&cj, points, s)?;
        for ((a, d), g) in v.iter_mut().zip(&states[j]).zip(gj) {
            *a += d - g;
        }
    }
    Ok(v)
}

/// Step `u` and the Duhamel terms of `F(U_0), ..., F(U_{n-1})` together on
/// one mesh with relative step `delta`, then assemble `U_0..=U_n` and `U_*`.
#[allow(clippy::too_many_arguments)]
pub fn build_u_chain(
    solver: &Solver,
    basis: &mut Basis,
    phi: &Field,
    nl: &NonlinearSpec,
    spec: &ExpansionSpec,
    n_max: usize,
    times: &[f64],
    delta: f64,
) -> Result<UChain> {
    let cfg = solver.config();
    nl.validate(cfg.theta, cfg.dim)?;
    check_tracked(spec.k_int())?;
    let phi = solver.lift_initial(phi)?;
    let mut init = vec![solver.initial_level(&phi)?];
    for _ in 0..n_max {
        init.push(solver.zero_level()?);
    }
    let phi_moments = init[0].init_moments;
    // every coefficient set the chain can touch
    let template = coefficients_from(spec, 0.0, |_| 1.0, |_, _| Ok(0.0))?;
    basis.prepare(&template)?;

    let nlc = *nl;
    let b = basis.clone();
    let sp = *spec;
    let mut points_cache: Option<(f64, Vec<f64>)> = None;
    let mut src = |l: usize, ctx: &crate::semigroup::SourceCtx| -> Result<Vec<f64>> {
        if l == 0 {
            return Ok(ctx.states[0].iter().map(|&u| nlc.f(u)).collect());
        }
        let pts = match &points_cache {
            Some((h, p)) if *h == ctx.grid.h && p.len() == ctx.grid.len() => p.clone(),
            _ => {
                let p: Vec<f64> = ctx.grid.points().collect();
                points_cache = Some((ctx.grid.h, p.clone()));
                p
            }
        };
        let prev = profile_values(&b, &sp, l - 1, ctx.s, &pts, ctx.states, &phi_moments, ctx.levels)?;
        Ok(prev.into_iter().map(|v| nlc.f(v)).collect())
    };

    let mut u_slices = Vec::new();
    let mut prof_slices: Vec<Vec<Field>> = vec![Vec::new(); n_max + 1];
    let levels = solver.run_levels(init, times, delta, &mut src, &mut |t, e, lv| {
        let win = e.window(&lv[0].values, t);
        let pts: Vec<f64> = win.grid.points().collect();
        let windows: Vec<Vec<f64>> = lv.iter().map(|l| e.window(&l.values, t).values).collect();
        for (j, slot) in prof_slices.iter_mut().enumerate() {
            let v = profile_values(&b, &sp, j, t, &pts, &windows, &phi_moments, lv)?;
            slot.push(Field::new(win.grid, v)?);
        }
        u_slices.push(win);
        Ok(())
    })?;

    let history = levels.into_iter().next().unwrap().history;
    let u = SpaceTimeField::new(times.to_vec(), u_slices)?;
    let profiles = prof_slices
        .into_iter()
        .map(|s| SpaceTimeField::new(times.to_vec(), s))
        .collect::<Result<Vec<_>>>()?;

    let gap_condition = nl.p > 1.0 + (2.0 * spec.k + spec.theta) / spec.dim as f64;
    let star = coefficients_from(spec, f64::INFINITY, |a| phi_moments[a as usize], |a, m| {
        extrapolate_integral(&history, a as usize, m).map(|f| f.total())
    });
    let (u_star, star_coefficients, star_error) = match star {
        Ok(c) => {
            let mut slices = Vec::new();
            for (t, sl) in u.times.iter().zip(&u.slices) {
                slices.push(basis.field(&c, sl.grid, *t)?);
            }
            (Some(SpaceTimeField::new(times.to_vec(), slices)?), Some(c), None)
        }
        Err(e) => {
            log::warn!("U_* unavailable: {e}");
            (None, None, Some(e.to_string()))
        }
    };
    if !gap_condition {
        log::warn!("p = {} does not satisfy p > 1 + (2K + theta)/N; U_* is reported anyway", nl.p);
    }
    Ok(UChain { u, profiles, u_star, star_coefficients, star_error, gap_condition, history, phi_moments })
}

/// The profile `v` around `M_* G`: its trajectory, `M_*` with its tail fit,
/// and the Duhamel term of `F_infinity`.
#[derive(Debug, Clone)]
pub struct VProfile {
    pub m_star: f64,
    pub m_star_fit: TailFit,
    pub v: SpaceTimeField,
    pub f_inf_duhamel: SpaceTimeField,
    pub coefficients: Vec<ExpansionCoefficients>,
}

/// `c_{alpha,m}(t) = M_alpha(phi) + int_0^t (s+1)^m M_alpha(F(u) - F_inf) ds`
/// from the two histories (recorded on the same mesh).
pub fn v_coefficients(
    spec: &ExpansionSpec,
    t: f64,
    phi_moments: &[f64; TRACKED],
    h_u: &SourceHistory,
    h_inf: &SourceHistory,
) -> Result<ExpansionCoefficients> {
    check_tracked(spec.k_int())?;
    coefficients_from(spec, t, |a| phi_moments[a as usize], |a, m| {
        Ok(h_u.integral(a as usize, m, t) - h_inf.integral(a as usize, m, t))
    })
}

/// `v = sum c_{alpha,m}(t) g_{alpha,m} + int_0^t e^{-(t-s)(-Delta)^{theta/2}} F_inf(s) ds`
/// with `F_inf(x,s) = F(M_* G(x, s+1))`, for a finished nonlinear run.
pub fn build_v(solver: &Solver, basis: &mut Basis, run: &NonlinearRun, spec: &ExpansionSpec) -> Result<VProfile> {
    let fit = extrapolate_integral(&run.history, 0, 0)?;
    let m_star = run.phi_moments[0] + fit.total();
    if fit.tail.abs() > 0.01 * m_star.abs() {
        return Err(Error::TailExtrapolation(format!(
            "mass ledger tail {:.3e} is more than 1% of M_* = {m_star:.6e}",
            fit.tail
        )));
    }
    let g0 = solver.kernel().profile1(0, 0)?;
    let nl = run.nonlinear;
    let f_inf = FnForcing(move |x: f64, s: f64| nl.f(m_star * g0.eval(x, s + 1.0).unwrap_or(0.0)));
    let times = run.trajectory.times.clone();
    let zero = Field::zeros(solver.config().initial_grid()?);
    let dinf = solver.solve_linear_fixed(&zero, &f_inf, &times, run.delta)?;
    if dinf.history.len() != run.history.len() {
        return Err(Error::Evaluation("F_inf history is not on the mesh of u".into()));
    }
    let mut slices = Vec::new();
    let mut coefficients = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let c = v_coefficients(spec, t, &run.phi_moments, &run.history, &dinf.history)?;
        let d = &dinf.trajectory.slices[k];
        let poly = basis.field(&c, d.grid, t)?;
        slices.push(poly.add(d)?);
        coefficients.push(c);
    }
    Ok(VProfile {
        m_star,
        m_star_fit: fit,
        v: SpaceTimeField::new(times, slices)?,
        f_inf_duhamel: dinf.trajectory,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(k: f64) -> SourceHistory {
        let mut h = SourceHistory::default();
        let mut s = 0.0f64;
        while s < 1000.0 {
            let dt = 0.05 * (s + 1.0);
            let mid = s + 0.5 * dt;
            h.push(mid, dt, [(mid + 1.0).powf(-k), 0.0, 0.0, 0.0]);
            s += dt;
        }
        h
    }

    #[test]
    fn extrapolated_integral_of_power_law() {
        let h = synthetic(2.0);
        let fit = extrapolate_integral(&h, 0, 0).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-6);
        // int_0^inf (s+1)^{-2} ds = 1, midpoint rule error is O(delta^2)
        assert!((fit.total() - 1.0).abs() < 2e-3, "{}", fit.total());
    }

    #[test]
    fn slow_decay_is_rejected() {
        let h = synthetic(1.05);
        assert!(matches!(extrapolate_integral(&h, 0, 0), Err(Error::TailExtrapolation(_))));
    }

    #[test]
    fn identical_histories_leave_phi_moments() {
        let spec = ExpansionSpec::new(1.0, 1.0, 1).unwrap();
        let h = synthetic(2.0);
        let pm = [2.0, 0.5, 1.0, 0.0];
        let c = v_coefficients(&spec, 10.0, &pm, &h, &h).unwrap();
        for t in &c.terms {
            assert_eq!(t.value, pm[t.alpha.order() as usize]);
        }
    }
}
