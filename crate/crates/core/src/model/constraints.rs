use serde::{Deserialize, Serialize};

use super::rate::{rate_from_budget, SlotBudget};
use super::{Allocation, Scenario};

/// Signed slack of every constraint; positive means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlacks {
    /// `χθT − ε` per SU (J).
    pub harvest_energy: Vec<f64>,
    /// `T − θT − τ` per SU (s).
    pub transmit_time: Vec<f64>,
    /// `I_m^th − Σ_i Σ_{ℓ∈D_i} p_i·I_{i,ℓ,m}` per PU (W).
    pub interference: Vec<f64>,
    /// `R_i − R_i^req` (or `R_i − ζ_i`) per SU.
    pub rate: Vec<f64>,
    /// `R_i` per SU.
    pub achieved_rate: Vec<f64>,
    /// `min(θ, 1 − θ)` per SU.
    pub ratio_bounds: Vec<f64>,
}

impl ConstraintSlacks {
    /// Largest violation among SUs holding sub-channels and all PUs, each
    /// normalized to a dimensionless size: energy by `χT`, time by `T`,
    /// interference by `I^th` and rate by the requirement. Zero when feasible.
    pub fn max_violation(&self, scenario: &Scenario, allocation: &Allocation) -> f64 {
        let t = scenario.params().slot_duration;
        let mut worst = 0.0f64;
        for i in allocation.allocated_sus() {
            let su = scenario.su(i);
            worst = worst.max(-self.harvest_energy[i] / (su.harvest_rate * t));
            worst = worst.max(-self.transmit_time[i] / t);
            if su.rate_requirement > 0.0 {
                worst = worst.max(-self.rate[i] / su.rate_requirement);
            }
            worst = worst.max(-self.ratio_bounds[i]);
        }
        for (m, pu) in scenario.pus().iter().enumerate() {
            worst = worst.max(-self.interference[m] / pu.interference_threshold);
        }
        worst
    }

    pub fn is_feasible(&self, scenario: &Scenario, allocation: &Allocation, tol: f64) -> bool {
        self.max_violation(scenario, allocation) <= tol
    }
}

/// Evaluates every constraint at `theta`. Never fails: values outside the
/// feasible interval simply produce negative slacks (and an infinite power
/// once the transmission window closes).
pub fn evaluate_constraints(scenario: &Scenario, allocation: &Allocation, theta: &[f64]) -> ConstraintSlacks {
    let params = scenario.params();
    let t = params.slot_duration;
    let k = scenario.num_sus();
    let mut slacks = ConstraintSlacks {
        harvest_energy: Vec::with_capacity(k),
        transmit_time: Vec::with_capacity(k),
        interference: scenario.pus().iter().map(|pu| pu.interference_threshold).collect(),
        rate: Vec::with_capacity(k),
        achieved_rate: Vec::with_capacity(k),
        ratio_bounds: Vec::with_capacity(k),
    };
    for (i, su) in scenario.sus().iter().enumerate() {
        let th = theta[i];
        let budget = SlotBudget::new(su, th, params);
        slacks.harvest_energy.push(budget.energy);
        slacks.transmit_time.push(budget.time);
        slacks.ratio_bounds.push(th.min(1.0 - th));

        let set = allocation.subchannels(i);
        let achieved: f64 = set
            .iter()
            .map(|&j| rate_from_budget(su.effective_gain(j, params), budget, t))
            .sum();
        slacks.achieved_rate.push(achieved);
        slacks.rate.push(achieved - su.rate_requirement);

        if set.is_empty() {
            continue;
        }
        let power = if budget.time > 0.0 {
            budget.energy.max(0.0) / budget.time
        } else {
            f64::INFINITY
        };
        for (m, slack) in slacks.interference.iter_mut().enumerate() {
            let weight: f64 = set.iter().map(|&l| scenario.interference_weight(i, l, m)).sum();
            if weight > 0.0 {
                *slack -= power * weight;
            }
        }
    }
    slacks
}
