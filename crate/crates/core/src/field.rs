//! Grid-sampled functions, weighted norms, moments and the forcing functional.
//!
//! Everything here is one-dimensional: a [`Grid1D`] is symmetric about the
//! origin with `x_i = (i - half) h`. Quadrature is the trapezoid rule with the
//! field taken as zero outside the grid.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub h: f64,
    /// Number of points on each side of the origin.
    pub half: usize,
}

impl Grid1D {
    pub fn new(h: f64, half: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || half == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs h > 0 and at least one point per side (h = {h}, half = {half})"
            )));
        }
        Ok(Grid1D { h, half })
    }

    /// Smallest symmetric grid with spacing `h` covering `[-extent, extent]`.
    pub fn covering(extent: f64, h: f64) -> Result<Self> {
        Self::new(h, (extent / h - 1e-9).ceil().max(1.0) as usize)
    }

    #[inline]
    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.h
    }

    /// Half-width `L` of the grid.
    pub fn extent(&self) -> f64 {
        self.half as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.x(i))
    }
}

/// A real function sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    /// Radius outside which the function is known to vanish.
    pub support_hint: Option<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at x = {}",
                grid.x(i)
            )));
        }
        Ok(Field {
            grid,
            values,
            support_hint: None,
        })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
            support_hint: Some(0.0),
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    /// Indicator of `[a, b]`, taking the value 1/2 at grid points on a jump.
    pub fn indicator(grid: Grid1D, a: f64, b: f64) -> Self {
        let tol = 1e-9 * grid.h;
        let values = grid
            .points()
            .map(|x| {
                if (x - a).abs() < tol || (x - b).abs() < tol {
                    0.5
                } else if x > a && x < b {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Field {
            grid,
            values,
            support_hint: Some(a.abs().max(b.abs())),
        }
    }

    pub fn with_support(mut self, radius: f64) -> Self {
        self.support_hint = Some(radius);
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            support_hint: self.support_hint,
        }
    }

    /// Pointwise `self - other`; both fields must share one grid.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a + b)
    }

    fn zip(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("fields live on different grids".into()));
        }
        let support_hint = match (self.support_hint, other.support_hint) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            support_hint,
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation at `x`; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = x / self.grid.h + self.grid.half as f64;
        if pos < 0.0 || pos > (self.grid.len() - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let f = pos - i as f64;
        (1.0 - f) * self.values[i] + f * self.values[i + 1]
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, grid: Grid1D) -> Field {
        Field {
            grid,
            values: grid.points().map(|x| self.eval(x)).collect(),
            support_hint: self.support_hint,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,value\n");
        for (x, v) in self.grid.points().zip(&self.values) {
            out.push_str(&format!("{x:e},{v:e}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Field> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || -> Result<f64> {
                it.next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| bad(format!("line {}: expected `x,value`", n + 1)))
            };
            xs.push(next()?);
            vs.push(next()?);
        }
        if xs.len() < 3 || xs.len() % 2 == 0 {
            return Err(bad("need an odd number (>= 3) of symmetric samples".into()));
        }
        let half = xs.len() / 2;
        let h = xs[1] - xs[0];
        if xs[half].abs() > 1e-9 * h {
            return Err(bad("grid is not centred on the origin".into()));
        }
        Field::new(Grid1D::new(h, half)?, vs)
    }
}

/// Exponent, weight and moment order of a weighted norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    /// Lebesgue exponent; `f64::INFINITY` for the sup norm.
    pub q: f64,
    pub ell: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl WeightSpec {
    pub fn new(q: f64, ell: f64, k: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
        }
        if !(ell >= 0.0 && ell <= k) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= ell <= K, got ell = {ell}, K = {k}"
            )));
        }
        Ok(WeightSpec { q, ell, k })
    }

    /// The constraint `ell < theta + N (1 - 1/q)`.
    pub fn check_ell_bound(&self, theta: f64, dim: usize) -> Result<()> {
        let cap = theta + dim as f64 * (1.0 - 1.0 / self.q);
        if self.ell < cap {
            Ok(())
        } else {
            Err(Error::Constraint(format!(
                "ell = {} must be below theta + N(1 - 1/q) = {cap}",
                self.ell
            )))
        }
    }
}

/// `|||f|||_{q,ell}`: the `L^q` norm of `|x|^ell f`.
pub fn weighted_norm(field: &Field, spec: &WeightSpec) -> f64 {
    norm_q_ell(field, spec.q, spec.ell)
}

pub fn norm_q_ell(field: &Field, q: f64, ell: f64) -> f64 {
    let g = &field.grid;
    let weight = |i: usize| if ell == 0.0 { 1.0 } else { g.x(i).abs().powf(ell) };
    if q.is_infinite() {
        return (0..g.len()).fold(0.0, |m, i| m.max(weight(i) * field.values[i].abs()));
    }
    let n = g.len();
    let mut s = 0.0;
    for i in 0..n {
        let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let v = weight(i) * field.values[i].abs();
        s += end * if q == 1.0 { v } else { v.powf(q) };
    }
    (s * g.h).powf(1.0 / q)
}

/// `M_alpha(f) = int x^alpha f(x) dx`. Logs a warning when the estimated
/// contribution from beyond the grid exceeds 1% of the result.
pub fn moment(field: &Field, alpha: u32) -> f64 {
    let m = raw_moment(field, alpha);
    let tail = moment_tail_bound(field, alpha);
    if tail > 0.01 * m.abs() && tail > 1e-300 {
        log::warn!("moment M_{alpha}: truncated tail bound {tail:.3e} exceeds 1% of {m:.3e}");
    }
    m
}

/// Trapezoid moment without the tail diagnostic.
pub fn raw_moment(field: &Field, alpha: u32) -> f64 {
    let g = &field.grid;
    let n = g.len();
    let mut s = 0.0;
    for (i, v) in field.values.iter().enumerate() {
        let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += end * g.x(i).powi(alpha as i32) * v;
    }
    s * g.h
}

/// Moment plus the power-law continuation of both grid edges (fitted on the
/// values at `L/2` and `L`). Used for mass checks on heavy-tailed slices; falls
/// back to the plain moment when the fitted tail does not converge.
pub fn moment_with_tail(field: &Field, alpha: u32) -> f64 {
    let m = raw_moment(field, alpha);
    let g = &field.grid;
    let l = g.extent();
    if matches!(field.support_hint, Some(r) if r <= l) {
        return m;
    }
    let n = g.len();
    let mut tail = 0.0;
    for (edge, mid, side) in [(0, g.half / 2, -1.0f64), (n - 1, n - 1 - g.half / 2, 1.0)] {
        let (fe, fm) = (field.values[edge], field.values[mid]);
        if fe == 0.0 || fe.signum() != fm.signum() || fm.abs() <= fe.abs() {
            continue;
        }
        let e = (fm / fe).ln() / 2f64.ln() - alpha as f64 - 1.0;
        if e <= 0.0 {
            return m;
        }
        tail += side.powi(alpha as i32) * fe * l.powi(alpha as i32 + 1) / e;
    }
    m + tail
}

/// Estimate of `int_{|x| > L} |x|^alpha |f|` assuming the power-law decay seen
/// between `L/2` and `L` continues.
pub fn moment_tail_bound(field: &Field, alpha: u32) -> f64 {
    let g = &field.grid;
    let l = g.extent();
    if matches!(field.support_hint, Some(r) if r <= l) {
        return 0.0;
    }
    let n = g.len();
    let mut total = 0.0;
    for (edge, mid) in [(0, g.half / 2), (n - 1, n - 1 - g.half / 2)] {
        let fe = field.values[edge].abs();
        let fm = field.values[mid].abs();
        if fe == 0.0 {
            continue;
        }
        let decay = if fm > fe { (fm / fe).ln() / 2f64.ln() } else { 0.0 };
        let e = decay - alpha as f64 - 1.0;
        total += if e > 0.0 { fe * l.powi(alpha as i32 + 1) / e } else { f64::INFINITY };
    }
    total
}

/// `E_{K,q}[f](t)` of the linear theory.
pub fn e_functional(f: &Field, k: f64, q: f64, theta: f64, dim: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let nq = dim as f64 / theta * (1.0 - 1.0 / q);
    let tq = t.powf(nq);
    let n_q = norm_q_ell(f, q, 0.0);
    let n_1 = norm_q_ell(f, 1.0, 0.0);
    let w_q = norm_q_ell(f, q, k);
    let w_1 = norm_q_ell(f, 1.0, k);
    Ok((t + 1.0).powf(k / theta) * (tq * n_q + n_1) + tq * w_q + w_1)
}

/// A time-indexed family of fields. Slices may use different grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub slices: Vec<Field>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    times: Vec<f64>,
    files: Vec<String>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, slices: Vec<Field>) -> Result<Self> {
        if times.len() != slices.len() {
            return Err(Error::InvalidParameter("one slice per time required".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        Ok(SpaceTimeField { times, slices })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Slice stored at exactly `t`, if any.
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .map(|i| &self.slices[i])
    }

    /// Piecewise-linear interpolation in time, evaluated at `x`.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let (i, w) = self.bracket(t);
        let a = self.slices[i].eval(x);
        if w == 0.0 {
            a
        } else {
            (1.0 - w) * a + w * self.slices[i + 1].eval(x)
        }
    }

    fn bracket(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, 0.0);
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        (i, (t - self.times[i]) / (self.times[i + 1] - self.times[i]))
    }

    /// Write one CSV per slice plus a JSON manifest into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for (k, s) in self.slices.iter().enumerate() {
            let name = format!("slice_{k:04}.csv");
            s.write_csv(&dir.join(&name))?;
            files.push(name);
        }
        let manifest = Manifest {
            times: self.times.clone(),
            files,
        };
        let path = dir.join("manifest.json");
        let mut out = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        out.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let slices = m
            .files
            .iter()
            .map(|f| Field::read_csv(&dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        SpaceTimeField::new(m.times, slices)
    }
}

/// `int_0^t (s+1)^m M_alpha(f(s)) ds` by the trapezoid rule over the stored
/// times (with linear interpolation of the moment at `t`). Fails when halving
/// the time resolution moves the result by more than 1%.
pub fn time_weighted_moment_integral(f: &SpaceTimeField, alpha: u32, m: u32, t: f64) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::NoSampleTimes);
    }
    if t < f.times[0] || t > *f.times.last().unwrap() + 1e-12 * (1.0 + t) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} outside the trajectory range [{}, {}]",
            f.times[0],
            f.times.last().unwrap()
        )));
    }
    let samples: Vec<(f64, f64)> = f
        .times
        .iter()
        .zip(&f.slices)
        .map(|(&s, sl)| (s, (s + 1.0).powi(m as i32) * raw_moment(sl, alpha)))
        .collect();
    let full = trapezoid_upto(&samples, t);
    if samples.len() >= 5 {
        let coarse: Vec<(f64, f64)> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0 || *i == samples.len() - 1)
            .map(|(_, p)| *p)
            .collect();
        let half = trapezoid_upto(&coarse, t);
        let scale = samples.iter().map(|p| p.1.abs()).fold(0.0, f64::max) * (t - f.times[0]);
        if (full - half).abs() > 0.01 * full.abs().max(1e-12 * scale) {
            return Err(Error::TimeResolution(format!(
                "moment integral {full:.6e} vs half resolution {half:.6e}"
            )));
        }
    }
    Ok(full)
}

fn trapezoid_upto(samples: &[(f64, f64)], t: f64) -> f64 {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let ((s0, v0), (s1, v1)) = (w[0], w[1]);
        if s0 >= t {
            break;
        }
        let end = s1.min(t);
        let v_end = v0 + (v1 - v0) * (end - s0) / (s1 - s0);
        acc += 0.5 * (v0 + v_end) * (end - s0);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid1D {
        Grid1D::new(1e-3, 4000).unwrap()
    }

    #[test]
    fn indicator_norms() {
        let ind = Field::indicator(grid(), -1.0, 1.0);
        assert_abs_diff_eq!(norm_q_ell(&ind, 1.0, 1.0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(norm_q_ell(&ind, f64::INFINITY, 0.0), 1.0);
        let half = Field::indicator(grid(), 0.0, 1.0);
        // the jump sample 1/2 enters squared, an O(h) defect
        assert_abs_diff_eq!(norm_q_ell(&half, 2.0, 1.0), 3f64.sqrt().recip(), epsilon = 5e-4);
    }

    #[test]
    fn indicator_moments() {
        let ind = Field::indicator(grid(), -1.0, 1.0);
        assert_abs_diff_eq!(moment(&ind, 0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moment(&ind, 1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moment(&ind, 2), 2.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(moment(&Field::indicator(grid(), 0.0, 1.0), 1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tail_corrected_mass() {
        let g = Grid1D::new(0.01, 3000).unwrap();
        let f = Field::from_fn(g, |x| 1.0 / (std::f64::consts::PI * (1.0 + x * x))).unwrap();
        assert!((raw_moment(&f, 0) - 1.0).abs() > 1e-2);
        assert_abs_diff_eq!(moment_with_tail(&f, 0), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn e_functional_examples() {
        let ind = Field::indicator(grid(), -1.0, 1.0);
        assert_abs_diff_eq!(
            e_functional(&ind, 1.0, f64::INFINITY, 1.0, 1, 0.0).unwrap(),
            3.0,
            epsilon = 1e-9
        );
        let f = ind.scaled((-1f64).exp());
        assert_abs_diff_eq!(
            e_functional(&f, 1.0, 1.0, 1.0, 1, 1.0).unwrap(),
            10.0 / 1f64.exp(),
            epsilon = 1e-9
        );
        assert_eq!(e_functional(&Field::zeros(grid()), 1.0, 2.0, 1.5, 1, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = Field::from_fn(Grid1D::new(0.25, 8).unwrap(), |x| (-x * x).exp()).unwrap();
        let p = dir.path().join("f.csv");
        f.write_csv(&p).unwrap();
        let g = Field::read_csv(&p).unwrap();
        assert_eq!(g.grid, f.grid);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let st = SpaceTimeField::new(vec![0.0, 1.0], vec![f.clone(), f.scaled(2.0)]).unwrap();
        st.write_dir(&dir.path().join("traj")).unwrap();
        let back = SpaceTimeField::read_dir(&dir.path().join("traj")).unwrap();
        assert_eq!(back.times, st.times);
        assert_abs_diff_eq!(back.eval(0.0, 0.5), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_rejects_unsorted_times() {
        let f = Field::zeros(Grid1D::new(1.0, 2).unwrap());
        assert!(SpaceTimeField::new(vec![1.0, 0.5], vec![f.clone(), f]).is_err());
    }
}
