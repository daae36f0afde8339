use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Closed-form kernel value for `theta = 1` (Poisson) or `theta = 2` (Gauss),
/// computed without any tabulation. `x` is the position in 1-D or the radius
/// in 2-D.
pub fn closed_form_oracle(theta: f64, dim: usize, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Evaluation(format!("time must be positive, got {t}")));
    }
    let r2 = x * x;
    match (theta, dim) {
        (th, 1) if th == 1.0 => Ok(t / (PI * (t * t + r2))),
        (th, 2) if th == 1.0 => Ok(t * (t * t + r2).powf(-1.5) / (2.0 * PI)),
        (th, n) if th == 2.0 && (n == 1 || n == 2) => {
            Ok((4.0 * PI * t).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
        }
        _ => Err(Error::InvalidParameter(format!(
            "no closed form for theta = {theta}, dim = {dim}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((closed_form_oracle(2.0, 1, 0.0, 1.0).unwrap() - 0.2820948).abs() < 1e-7);
        assert!((closed_form_oracle(1.0, 1, 1.0, 1.0).unwrap() - 0.1591549).abs() < 1e-7);
        assert!((closed_form_oracle(1.0, 2, 0.0, 1.0).unwrap() - 0.1591549).abs() < 1e-7);
        assert!(closed_form_oracle(1.5, 1, 0.0, 1.0).is_err());
        assert!(closed_form_oracle(1.0, 1, 0.0, 0.0).is_err());
    }
}
