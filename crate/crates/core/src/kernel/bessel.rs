//! Bessel function J0 for the radial (2-D) inversion.

use std::f64::consts::PI;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let q = -0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else if ax < 30.0 {
        miller(ax)
    } else {
        hankel_asymptotic(ax)
    }
}

// Backward recurrence normalised by J0 + 2 sum J_2k = 1.
fn miller(x: f64) -> f64 {
    let start = 2 * ((x as usize + 30) / 2) + 2;
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * j;
        }
        if k == 1 {
            j0 = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j0;
    j0 / norm
}

fn hankel_asymptotic(x: f64) -> f64 {
    // P ~ sum (-1)^k a_{2k}/x^{2k}, Q ~ sum (-1)^k a_{2k+1}/x^{2k+1}
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40usize {
        let term = a / x.powi(k as i32);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q -= sign * term;
        }
        let kk = (2 * k + 1) as f64;
        a *= kk * kk / (8.0 * (k as f64 + 1.0));
        if last < 1e-18 {
            break;
        }
    }
    let chi = x - PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_integral(x: f64) -> f64 {
        // (1/pi) int_0^pi cos(x sin t) dt, periodic trapezoid
        let n = 400 + 2 * x as usize;
        let h = PI / n as f64;
        (0..n).map(|i| (x * (i as f64 * h).sin()).cos()).sum::<f64>() / n as f64
    }

    #[test]
    fn agrees_with_integral_representation() {
        for &x in &[0.0, 0.5, 2.4048, 7.9, 8.1, 15.0, 29.9, 30.1, 100.0, 733.3] {
            let a = j0(x);
            let b = j0_integral(x);
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }
}
