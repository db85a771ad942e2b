//! The Lambert-W closed form for a single effective gain, its first-order
//! condition and the finite-difference curvature probes.

use std::f64::consts::E;

use super::lambert::lambert_w0;
use crate::error::{Error, Result};
use crate::model::{rate_from_budget, SecondaryUser, SlotBudget, SystemParams};

/// Closed-form optimum and whether it had to be pulled back into the guarded
/// interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormTheta {
    pub theta: f64,
    pub projected: bool,
}

/// `W₀(B/e)/B`, with the series `(1 − x + 3x²/2)/e`, `x = B/e`, near `B = 0`.
fn w_over_b(b: f64) -> Result<(f64, f64)> {
    if b < 1e-6 {
        let x = b / E;
        let w = x - x * x + 1.5 * x * x * x;
        Ok(((1.0 - x + 1.5 * x * x) / E, w))
    } else {
        let w = lambert_w0(b / E)?;
        Ok((w / b, w))
    }
}

/// `θ* = (T − τ)/T − W((Hχ − 1)/e)·H·(χT − χτ − ε) / (T(Hχ − 1)(1 + W((Hχ − 1)/e)))`,
/// the unconstrained maximizer of one sub-channel's rate.
pub fn closed_form_theta(su: &SecondaryUser, h: f64, params: &SystemParams) -> Result<ClosedFormTheta> {
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return Err(Error::InfeasibleUser {
            su: su.id,
            lower: iv.lower,
            upper: iv.upper,
        });
    }
    let b = h * su.harvest_rate - 1.0;
    if !(b > 0.0) || !h.is_finite() {
        return Err(Error::Precondition(format!(
            "closed form needs Hχ > 1, got H = {h}, χ = {} (Hχ = {})",
            su.harvest_rate,
            h * su.harvest_rate
        )));
    }
    let (ratio, w) = w_over_b(b)?;
    let t = params.slot_duration;
    let theta = iv.upper - ratio * h * su.spare_energy(params) / (t * (1.0 + w));
    let (lo, hi) = iv.guarded();
    if theta >= lo && theta <= hi {
        Ok(ClosedFormTheta {
            theta,
            projected: false,
        })
    } else {
        log::warn!("closed-form θ = {theta} for SU {} left [{lo}, {hi}]; projecting", su.id);
        Ok(ClosedFormTheta {
            theta: theta.clamp(lo, hi),
            projected: true,
        })
    }
}

/// First-order expression `H·c/(a + Hb) − ln(1 + Hb/a)` of one sub-channel's
/// rate (in nats): positive where the rate still increases, zero at the
/// optimum, decreasing in `θ`.
pub fn stationarity_residual(su: &SecondaryUser, h: f64, theta: f64, params: &SystemParams) -> f64 {
    let SlotBudget { time: a, energy: b } = SlotBudget::new(su, theta, params);
    let s = a + h * b;
    h * su.spare_energy(params) / s - (h * b / a).ln_1p()
}

fn interior_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = (f64, f64, f64)> {
    let h = (hi - lo) / (n.max(2) - 1) as f64;
    (1..n.saturating_sub(1)).map(move |k| {
        let x = lo + k as f64 * h;
        (x - h, x, x + h)
    })
}

/// True when the rate on a sub-channel with gain `h` has a negative centered
/// second difference at every interior point of a `grid_size`-point grid over
/// the guarded interval. Always false when `Hχ ≤ 1`, where concavity is not
/// claimed.
pub fn concavity_certificate(su: &SecondaryUser, h: f64, params: &SystemParams, grid_size: usize) -> bool {
    if !(h * su.harvest_rate > 1.0) {
        return false;
    }
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return false;
    }
    let (lo, hi) = iv.guarded();
    let t = params.slot_duration;
    let r = |x: f64| rate_from_budget(h, SlotBudget::new(su, x, params), t);
    interior_grid(lo, hi, grid_size).all(|(x0, x1, x2)| r(x2) - 2.0 * r(x1) + r(x0) < 0.0)
}

/// True when the interference slack `−p(θ)` (up to the positive factor
/// `Σ I_{i,j,m}` and the constant threshold) has negative second difference
/// at every interior grid point, i.e. the transmit power is convex and C3
/// describes a convex feasible set.
pub fn constraint_convexity_probe(su: &SecondaryUser, params: &SystemParams, grid_size: usize) -> bool {
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return false;
    }
    let (lo, hi) = iv.guarded();
    let slack = |x: f64| {
        let bud = SlotBudget::new(su, x, params);
        -bud.energy / bud.time
    };
    interior_grid(lo, hi, grid_size).all(|(x0, x1, x2)| slack(x2) - 2.0 * slack(x1) + slack(x0) < 0.0)
}
