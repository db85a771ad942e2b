//! Closed-form first, dual method when constraints bite.

use super::closed_form::closed_form_theta;
use super::dual::{dual_subgradient_solve, DualConfig, SolveFlag, SolveMethod, SolveReport};
use super::per_su::{maximize_weighted, scan_rate_sum, Weights};
use crate::allocation::initial_thetas;
use crate::error::Result;
use crate::model::{evaluate_constraints, rate_from_budget, Allocation, Scenario, SlotBudget};

/// Unconstrained optimum of every allocated SU: the closed form when all of
/// the SU's gains coincide, the summed first-order condition when they
/// differ, and a scan (flagged) when no gain satisfies `Hχ > 1`. SUs without
/// sub-channels keep their initial ratio.
pub fn closed_form_solve(scenario: &Scenario, allocation: &Allocation, tol_primal: f64) -> Result<SolveReport> {
    let mut theta = initial_thetas(scenario)?;
    let mut flags = Vec::new();
    for i in allocation.allocated_sus() {
        let su = scenario.su(i);
        let hs = scenario.effective_gains(i, allocation.subchannels(i));
        let chi = su.harvest_rate;
        let uniform = hs.iter().all(|&h| (h - hs[0]).abs() <= 1e-12 * hs[0].abs());
        if !hs.iter().any(|&h| h * chi > 1.0) {
            flags.push(SolveFlag::ScanFallback { su: i });
            theta[i] = scan_rate_sum(su, &hs, scenario.params())?.theta;
        } else if uniform {
            let cf = closed_form_theta(su, hs[0], scenario.params())?;
            if cf.projected {
                flags.push(SolveFlag::Projected { su: i });
            }
            theta[i] = cf.theta;
        } else {
            let m = maximize_weighted(su, &hs, scenario.params(), Weights::RATE_ONLY, None)?;
            if !m.interior {
                flags.push(SolveFlag::Boundary { su: i });
            }
            theta[i] = m.theta;
        }
    }
    Ok(SolveReport::evaluate(
        scenario,
        allocation,
        theta,
        SolveMethod::ClosedForm,
        1,
        tol_primal,
        flags,
    ))
}

/// Smallest guarded ratio at which each allocated SU meets its rate
/// requirement (the guarded lower end when it has none). `None` when the
/// requirement exceeds the SU's unconstrained maximum. Unallocated SUs get
/// `Some` of their interval's lower guard.
///
/// The rate is concave in `θ` and the power increasing, so these ratios are
/// also the least-interference way of meeting every requirement.
pub fn min_rate_thetas(scenario: &Scenario, allocation: &Allocation) -> Result<Vec<Option<f64>>> {
    let params = scenario.params();
    let t = params.slot_duration;
    (0..scenario.num_sus())
        .map(|i| {
            let su = scenario.su(i);
            let (lo, _) = scenario.theta_interval(i).guarded();
            let req = su.rate_requirement;
            if !allocation.is_allocated(i) || req <= 0.0 {
                return Ok(Some(lo));
            }
            let hs = scenario.effective_gains(i, allocation.subchannels(i));
            let rate = |x: f64| -> f64 {
                let b = SlotBudget::new(su, x, params);
                hs.iter().map(|&h| rate_from_budget(h, b, t)).sum()
            };
            let peak = maximize_weighted(su, &hs, params, Weights::RATE_ONLY, None)?.theta;
            if rate(peak) < req {
                return Ok(None);
            }
            if rate(lo) >= req {
                return Ok(Some(lo));
            }
            let (mut a, mut b) = (lo, peak);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if rate(mid) >= req {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= f64::EPSILON * b {
                    break;
                }
            }
            Ok(Some(b))
        })
        .collect()
}

/// True when every requirement can be met at once without breaking an
/// interference threshold.
fn rates_jointly_feasible(scenario: &Scenario, allocation: &Allocation, tol: f64) -> Result<bool> {
    let mins = min_rate_thetas(scenario, allocation)?;
    if mins.iter().any(Option::is_none) {
        return Ok(false);
    }
    let theta: Vec<f64> = mins.into_iter().map(Option::unwrap).collect();
    let slacks = evaluate_constraints(scenario, allocation, &theta);
    Ok(scenario
        .pus()
        .iter()
        .zip(&slacks.interference)
        .all(|(pu, s)| -s / pu.interference_threshold <= tol))
}

/// Full slot-structure solve: the unconstrained optimum when it already
/// satisfies every constraint, otherwise the dual method. When the rate
/// requirements cannot be met together with the interference thresholds the
/// dual method runs with the requirements dropped and the result is judged
/// against the original problem (so it reports non-convergence).
pub fn solve_structure(scenario: &Scenario, allocation: &Allocation, cfg: &DualConfig) -> Result<SolveReport> {
    let closed = closed_form_solve(scenario, allocation, cfg.tol_primal)?;
    if closed.converged {
        return Ok(closed);
    }
    if rates_jointly_feasible(scenario, allocation, cfg.tol_primal)? {
        let mut report = dual_subgradient_solve(scenario, allocation, cfg)?;
        report.flags.extend(closed.flags);
        return Ok(report);
    }
    log::info!("rate requirements conflict with interference thresholds; solving without them");
    let relaxed = scenario.map_sus(|su| su.rate_requirement = 0.0)?;
    let inner = dual_subgradient_solve(&relaxed, allocation, cfg)?;
    let mut flags = closed.flags;
    flags.extend(inner.flags);
    flags.push(SolveFlag::RatesRelaxed);
    let mut report = SolveReport::evaluate(
        scenario,
        allocation,
        inner.theta,
        SolveMethod::DualSubgradient,
        inner.iterations,
        cfg.tol_primal,
        flags,
    );
    report.converged = false;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{scenario, su};

    fn instance(threshold: f64, reqs: [f64; 2]) -> (Scenario, Allocation) {
        let sc = scenario(
            vec![
                su(0, vec![1e-6; 4], reqs[0], 1, 1e-10),
                su(1, vec![2e-6; 4], reqs[1], 1, 1e-10),
            ],
            &[threshold],
        );
        (sc, Allocation::from_sets(vec![vec![0, 1], vec![2, 3]]))
    }

    fn free_load() -> f64 {
        let (sc, alloc) = instance(1.0, [0.0, 0.0]);
        let r = closed_form_solve(&sc, &alloc, 1e-6).unwrap();
        1.0 - evaluate_constraints(&sc, &alloc, &r.theta).interference[0]
    }

    #[test]
    fn loose_instance_uses_closed_form() {
        let (sc, alloc) = instance(1.0, [0.0, 0.0]);
        let r = solve_structure(&sc, &alloc, &DualConfig::default()).unwrap();
        assert_eq!(r.method, SolveMethod::ClosedForm);
        assert!(r.converged && r.flags.is_empty());
        let cf = closed_form_theta(sc.su(0), sc.su(0).effective_gain(0, sc.params()), sc.params()).unwrap();
        assert_eq!(r.theta[0], cf.theta);
    }

    #[test]
    fn binding_threshold_switches_to_dual() {
        let (sc, alloc) = instance(free_load() / 4.0, [0.0, 0.0]);
        let r = solve_structure(&sc, &alloc, &DualConfig::default()).unwrap();
        assert_eq!(r.method, SolveMethod::DualSubgradient);
        assert!(r.converged, "{r:?}");
    }

    #[test]
    fn conflicting_requirements_are_relaxed() {
        let (sc, alloc) = instance(free_load() / 1e4, [6.0, 8.0]);
        let r = solve_structure(&sc, &alloc, &DualConfig::default()).unwrap();
        assert!(r.flags.contains(&SolveFlag::RatesRelaxed));
        assert!(!r.converged && r.max_constraint_violation > 0.0);
        // the interference threshold itself is respected
        let slack = evaluate_constraints(&sc, &alloc, &r.theta).interference[0];
        assert!(slack >= -1e-6 * sc.pus()[0].interference_threshold);
    }

    #[test]
    fn minimal_ratios_just_meet_requirements() {
        let (sc, alloc) = instance(1.0, [3.0, 0.0]);
        let mins = min_rate_thetas(&sc, &alloc).unwrap();
        let th = mins[0].unwrap();
        let slacks = evaluate_constraints(&sc, &alloc, &[th, 0.5]);
        assert!(slacks.rate[0] >= 0.0 && slacks.rate[0] < 1e-9);
        assert_eq!(mins[1], Some(sc.theta_interval(1).guarded().0));
        let (sc, alloc) = instance(1.0, [1e3, 0.0]);
        assert_eq!(min_rate_thetas(&sc, &alloc).unwrap()[0], None);
    }
}
