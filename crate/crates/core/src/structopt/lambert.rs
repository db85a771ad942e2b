//! Principal branch of the Lambert W function and the `x ln x = ax + b`
//! equation it solves.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;

fn initial_guess(x: f64) -> f64 {
    if x < -0.32 {
        // expansion around the branch point in p = sqrt(2(ex + 1))
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x.abs() < 1e-3 {
        x - x * x + 1.5 * x * x * x
    } else if x < 3.0 {
        // Winitzki's approximation
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// `W₀(x)`, the solution `w ≥ −1` of `w·eʷ = x`, for `x ≥ −1/e`.
///
/// Halley's iteration from a region-specific starting point. Inputs within a
/// few ulps below `−1/e` (where `ex + 1` rounds to zero or below) map to the
/// branch point `−1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x == f64::INFINITY {
        return Err(Error::domain("Lambert W argument", format!("{x}")));
    }
    if x < -INV_E * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::domain("Lambert W argument", format!("{x} < -1/e")));
    }
    if E * x + 1.0 <= 0.0 {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = initial_guess(x);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // The guess overshot the branch point; the derivative vanishes
            // here, so fall back to the closest admissible value.
            w = -1.0 + 1e-12;
            continue;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}

/// Solves `x·ln x = a·x + b` for `x > 0` on the principal branch:
/// `x = b / W₀(b·e^{−a})`, or `x = eᵃ` when `b = 0`.
pub fn solve_x_ln_x(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NoSolution(format!("non-finite coefficients a = {a}, b = {b}")));
    }
    if b == 0.0 {
        return Ok(a.exp());
    }
    let arg = b * (-a).exp();
    let w =
        lambert_w0(arg).map_err(|_| Error::NoSolution(format!("b·e^(-a) = {arg} is below -1/e (a = {a}, b = {b})")))?;
    if w == 0.0 {
        // arg underflowed to zero with b ≠ 0: x ln x ≈ a x, the b = 0 root
        return Ok(a.exp());
    }
    Ok(b / w)
}
