//! Per-SU harvesting-ratio maximization over several sub-channels.

use std::f64::consts::LN_2;

use super::closed_form::closed_form_theta;
use super::search::{maximize_concave_1d, scan_and_refine, Maximum};
use crate::error::{Error, Result};
use crate::model::{rate_from_budget, SecondaryUser, SlotBudget, SystemParams};

/// Maximizer of one SU's rate sum and whether it is interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerSuOptimum {
    pub theta: f64,
    pub interior: bool,
}

/// Per-SU objective `w·Σ_j r_j(θ) + linear·θ − power_weight·p(θ)`, i.e. the
/// rate sum with Lagrangian terms attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Weights {
    pub rate: f64,
    pub linear: f64,
    pub power: f64,
}

impl Weights {
    pub const RATE_ONLY: Weights = Weights {
        rate: 1.0,
        linear: 0.0,
        power: 0.0,
    };
}

/// First and second derivative of the weighted objective.
pub(crate) fn weighted_slope(
    su: &SecondaryUser,
    hs: &[f64],
    params: &SystemParams,
    w: Weights,
    theta: f64,
) -> (f64, f64) {
    let t = params.slot_duration;
    let SlotBudget { time: a, energy: b } = SlotBudget::new(su, theta, params);
    let c = su.spare_energy(params);
    let (mut d1, mut d2) = (0.0, 0.0);
    for &h in hs {
        if h <= 0.0 {
            continue;
        }
        let s = a + h * b;
        d1 += h * c / s - (h * b / a).ln_1p();
        d2 -= t * h * h * c * c / (a * s * s);
    }
    let mut g = w.rate * d1 / LN_2 + w.linear;
    let mut gp = w.rate * d2 / LN_2;
    if w.power > 0.0 {
        // p = b/a, p' = T·c/a², p'' = 2T²c/a³
        g -= w.power * t * c / (a * a);
        gp -= w.power * 2.0 * t * t * c / (a * a * a);
    }
    (g, gp)
}

/// Maximizes the weighted objective on the guarded interval. Concave for any
/// positive gains, so the safeguarded Newton search applies directly.
pub(crate) fn maximize_weighted(
    su: &SecondaryUser,
    hs: &[f64],
    params: &SystemParams,
    w: Weights,
    init: Option<f64>,
) -> Result<Maximum> {
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return Err(Error::InfeasibleUser {
            su: su.id,
            lower: iv.lower,
            upper: iv.upper,
        });
    }
    let (lo, hi) = iv.guarded();
    Ok(maximize_concave_1d(lo, hi, init, |x| {
        weighted_slope(su, hs, params, w, x)
    }))
}

/// Dense scan plus golden refinement of the plain rate sum; used when no
/// sub-channel satisfies `Hχ > 1` and the closed form does not apply.
pub(crate) fn scan_rate_sum(su: &SecondaryUser, hs: &[f64], params: &SystemParams) -> Result<Maximum> {
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return Err(Error::InfeasibleUser {
            su: su.id,
            lower: iv.lower,
            upper: iv.upper,
        });
    }
    let (lo, hi) = iv.guarded();
    let t = params.slot_duration;
    Ok(scan_and_refine(lo, hi, 2001, 80, |x| {
        let budget = SlotBudget::new(su, x, params);
        hs.iter().map(|&h| rate_from_budget(h, budget, t)).sum()
    }))
}

/// Maximizes `Σ_{j∈D} r_{i,j}(θ)` over the guarded feasible interval.
///
/// Root-finds the summed first-order condition, started from the closed form
/// at the arithmetic-mean gain. Needs `H_{i,j}·χ > 1` for some `j ∈ D`.
pub fn per_su_theta_optimize(su: &SecondaryUser, subchannels: &[usize], params: &SystemParams) -> Result<PerSuOptimum> {
    if subchannels.is_empty() {
        return Err(Error::Precondition(format!("SU {} holds no sub-channels", su.id)));
    }
    let hs: Vec<f64> = subchannels.iter().map(|&j| su.effective_gain(j, params)).collect();
    if !hs.iter().any(|h| h * su.harvest_rate > 1.0) {
        return Err(Error::Precondition(format!("SU {}: no sub-channel with Hχ > 1", su.id)));
    }
    let mean = hs.iter().sum::<f64>() / hs.len() as f64;
    let init = closed_form_theta(su, mean, params).ok().map(|c| c.theta);
    let m = maximize_weighted(su, &hs, params, Weights::RATE_ONLY, init)?;
    Ok(PerSuOptimum {
        theta: m.theta,
        interior: m.interior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrafficClass;
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams {
            slot_duration: 1e-3,
            subchannel_bandwidth: 62.5e3,
            noise_psd: 1.6e-18,
            snr_gap: 1.0,
            symbol_duration: 1.6e-5,
            start_frequency: 2.4e9,
            num_subchannels: 4,
        }
    }

    fn su(chi: f64, eps: f64, hs: [f64; 4]) -> SecondaryUser {
        let noise = params().noise_power();
        SecondaryUser {
            id: 0,
            class: TrafficClass::RealTime,
            harvest_rate: chi,
            sensing_energy: eps,
            sensing_time: 10e-6,
            rate_requirement: 0.0,
            gains: hs.iter().map(|h| (h * noise).sqrt()).collect(),
            cross_gains: vec![vec![]; 4],
            pu_interference: 0.0,
        }
    }

    /// 10⁶-point scan of the longhand rate sum, then golden refinement.
    fn dense_argmax(s: &SecondaryUser, hs: &[f64]) -> f64 {
        let p = params();
        let t = p.slot_duration;
        let f = |th: f64| -> f64 {
            let a = t - th * t - s.sensing_time;
            let b = s.harvest_rate * th * t - s.sensing_energy;
            hs.iter().map(|h| (a / t) * (1.0 + h * b / a).log2()).sum()
        };
        let iv = s.theta_interval(&p);
        let n = 1_000_000;
        let step = iv.width() / n as f64;
        let mut best = (1, f64::NEG_INFINITY);
        for k in 1..n {
            let v = f(iv.lower + k as f64 * step);
            if v > best.1 {
                best = (k, v);
            }
        }
        let (mut lo, mut hi) = (
            iv.lower + (best.0 - 1) as f64 * step,
            iv.lower + (best.0 + 1) as f64 * step,
        );
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = hi - g * (hi - lo);
            let d = lo + g * (hi - lo);
            if f(c) >= f(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn reduces_to_closed_form() {
        let p = params();
        let s = su(5.0, 1e-3, [10.0, 10.0, 10.0, 3.0]);
        let cf = closed_form_theta(&s, 10.0, &p).unwrap().theta;
        let single = per_su_theta_optimize(&s, &[1], &p).unwrap();
        assert!((single.theta - cf).abs() < 1e-8 && single.interior);
        let triple = per_su_theta_optimize(&s, &[0, 1, 2], &p).unwrap();
        assert!((triple.theta - cf).abs() < 1e-8);
    }

    #[test]
    fn heterogeneous_matches_dense_scan() {
        let p = params();
        let hs = [0.7, 40.0, 3.0, 900.0];
        let s = su(5.0, 1e-3, hs);
        let got = per_su_theta_optimize(&s, &[0, 1, 2, 3], &p).unwrap().theta;
        assert!((got - dense_argmax(&s, &hs)).abs() < 1e-6);
    }

    #[test]
    fn preconditions() {
        let p = params();
        let s = su(5.0, 1e-3, [0.1, 0.1, 0.1, 0.1]);
        assert!(matches!(
            per_su_theta_optimize(&s, &[0, 1], &p),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            per_su_theta_optimize(&s, &[], &p),
            Err(Error::Precondition(_))
        ));
        // the scan fallback still finds the interior peak
        let m = scan_rate_sum(&s, &[0.1, 0.1], &p).unwrap();
        assert!(m.interior);
    }

    proptest! {
        #[test]
        fn argmax_is_scale_invariant(scale in 1e-3f64..1e3, hs in prop::array::uniform4(0.5f64..500.0)) {
            let p = params();
            let s = su(5.0, 1e-3, hs);
            let plain = maximize_weighted(&s, &hs, &p, Weights::RATE_ONLY, None).unwrap().theta;
            let w = Weights { rate: scale, ..Weights::RATE_ONLY };
            let scaled = maximize_weighted(&s, &hs, &p, w, None).unwrap().theta;
            prop_assert!((plain - scaled).abs() <= 1e-8);
        }
    }
}
