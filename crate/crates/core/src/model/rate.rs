use super::{SecondaryUser, SystemParams};
use crate::error::{Error, Result};

/// SNR gap of uncoded MQAM, `Γ = −ln(5·BER)/1.5`.
pub fn snr_gap(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber <= 0.2) {
        return Err(Error::domain("bit error rate", format!("{ber} not in (0, 0.2]")));
    }
    Ok(-(5.0 * ber).ln() / 1.5)
}

/// Time and energy left for transmission in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotBudget {
    /// `T − θT − τ` (s).
    pub time: f64,
    /// `χθT − ε` (J).
    pub energy: f64,
}

impl SlotBudget {
    pub fn new(su: &SecondaryUser, theta: f64, params: &SystemParams) -> Self {
        let t = params.slot_duration;
        SlotBudget {
            time: t - theta * t - su.sensing_time,
            energy: su.harvest_rate * theta * t - su.sensing_energy,
        }
    }
}

/// `(a/T)·log₂(1 + H·b/a)` for a budget `(a, b)`; zero once either side of the
/// budget is exhausted.
pub fn rate_from_budget(h: f64, budget: SlotBudget, slot_duration: f64) -> f64 {
    let SlotBudget { time: a, energy: b } = budget;
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    a / slot_duration * (h * b / a).ln_1p() / std::f64::consts::LN_2
}

/// Checks `θ ∈ [lower, upper]`; returns whether it sits on an end point.
fn check_theta(su: &SecondaryUser, theta: f64, params: &SystemParams) -> Result<bool> {
    let iv = su.theta_interval(params);
    if theta >= iv.lower && theta <= iv.upper {
        Ok(theta == iv.lower || theta == iv.upper)
    } else {
        Err(Error::InfeasibleTheta {
            theta,
            lower: iv.lower,
            upper: iv.upper,
        })
    }
}

/// Transmit power `(χθT − ε)/(T − θT − τ)` when all harvested energy that
/// sensing leaves over is spent during the transmission phase.
pub fn transmit_power(su: &SecondaryUser, theta: f64, params: &SystemParams) -> Result<f64> {
    check_theta(su, theta, params)?;
    let budget = SlotBudget::new(su, theta, params);
    if budget.time <= 0.0 {
        return Err(Error::InfeasibleTheta {
            theta,
            lower: su.theta_interval(params).lower,
            upper: su.theta_interval(params).upper,
        });
    }
    Ok(budget.energy.max(0.0) / budget.time)
}

/// Rate of `su` on sub-channel `j`. Both ends of the feasible interval give 0.
pub fn rate_per_subchannel(su: &SecondaryUser, j: usize, theta: f64, params: &SystemParams) -> Result<f64> {
    let on_boundary = check_theta(su, theta, params)?;
    if j >= su.gains.len() {
        return Err(Error::domain("sub-channel", format!("{j} >= {}", su.gains.len())));
    }
    let h = su.effective_gain(j, params);
    if !(h > 0.0) {
        return Err(Error::domain(
            "effective gain H",
            format!("{h} for SU {} on {j}", su.id),
        ));
    }
    if on_boundary {
        // The limit at both ends; computing it directly leaves rounding dust.
        return Ok(0.0);
    }
    Ok(rate_from_budget(
        h,
        SlotBudget::new(su, theta, params),
        params.slot_duration,
    ))
}

/// `R_i`: the sum of [`rate_per_subchannel`] over `subchannels`.
///
/// Zero-gain sub-channels contribute nothing rather than failing, since an SU
/// may legitimately hold a sub-channel it cannot use.
pub fn total_rate(su: &SecondaryUser, subchannels: &[usize], theta: f64, params: &SystemParams) -> Result<f64> {
    let on_boundary = check_theta(su, theta, params)?;
    let budget = SlotBudget::new(su, theta, params);
    let mut sum = 0.0;
    for &j in subchannels {
        if j >= su.gains.len() {
            return Err(Error::domain("sub-channel", format!("{j} >= {}", su.gains.len())));
        }
        if on_boundary {
            continue;
        }
        sum += rate_from_budget(su.effective_gain(j, params), budget, params.slot_duration);
    }
    Ok(sum)
}

/// `d/dθ Σ_j r_{i,j}` for effective gains `hs`, in bits/s/Hz per unit θ.
///
/// Per gain the derivative is `(H·c/s − ln(s/a))/ln 2` with `s = a + H·b` and
/// `c = χ(T − τ) − ε`. Only meaningful strictly inside the interval.
pub fn objective_derivative(su: &SecondaryUser, hs: &[f64], theta: f64, params: &SystemParams) -> f64 {
    let SlotBudget { time: a, energy: b } = SlotBudget::new(su, theta, params);
    let c = su.spare_energy(params);
    hs.iter()
        .map(|&h| {
            let s = a + h * b;
            h * c / s - (s / a).ln()
        })
        .sum::<f64>()
        / std::f64::consts::LN_2
}
