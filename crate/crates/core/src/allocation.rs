//! Sub-channel assignment at fixed harvesting ratios.
//!
//! [`allocate_efm`] serves real-time SUs first, always picking the
//! unsatisfied one with the largest energy figure of merit `α = χ/ε` and
//! handing it the best remaining sub-channel. Whatever is left goes to the
//! non-real-time SUs by the same preference. Interference is deliberately
//! ignored here; it is checked afterwards by
//! [`evaluate_constraints`](crate::model::evaluate_constraints).

use crate::error::{Error, Result};
use crate::model::{rate_from_budget, Allocation, Scenario, SecondaryUser, SlotBudget, SystemParams};

/// Midpoint of the feasible interval, `ε/(2χT) + (1 − τ/T)/2`.
pub fn initial_theta(su: &SecondaryUser, params: &SystemParams) -> Result<f64> {
    let iv = su.theta_interval(params);
    if iv.is_empty() {
        return Err(Error::InfeasibleUser {
            su: su.id,
            lower: iv.lower,
            upper: iv.upper,
        });
    }
    let t = params.slot_duration;
    Ok(su.sensing_energy / (2.0 * su.harvest_rate * t) + 0.5 * (1.0 - su.sensing_time / t))
}

/// [`initial_theta`] for every SU of the scenario.
pub fn initial_thetas(scenario: &Scenario) -> Result<Vec<f64>> {
    scenario
        .sus()
        .iter()
        .map(|su| initial_theta(su, scenario.params()))
        .collect()
}

/// Energy figure of merit `χ/ε`. An SU that spends no energy on sensing gets
/// `+∞`, i.e. top priority.
pub fn efm_factor(su: &SecondaryUser) -> f64 {
    if su.sensing_energy == 0.0 {
        f64::INFINITY
    } else {
        su.harvest_rate / su.sensing_energy
    }
}

/// Which loop of the EFM allocation made an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    RealTime,
    NonRealTime,
}

/// One assignment made by [`allocate_efm_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationStep {
    pub phase: Phase,
    pub su: usize,
    pub subchannel: usize,
    /// EFM factor of the chosen SU.
    pub efm: f64,
    /// SUs that were eligible for this step (including the chosen one).
    pub candidates: Vec<usize>,
}

/// Working state of the EFM allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct EfmState {
    /// Sub-channels not yet assigned, ascending.
    pub remaining: Vec<usize>,
    /// Accumulated rate `R_i` at the initial ratios.
    pub rates: Vec<f64>,
    pub allocation: Allocation,
    /// Real-time SUs that received at least one sub-channel.
    pub allocated_rt: Vec<usize>,
    /// Non-real-time SUs that received at least one sub-channel.
    pub allocated_nrt: Vec<usize>,
}

struct RateTable<'a> {
    scenario: &'a Scenario,
    budgets: Vec<SlotBudget>,
}

impl<'a> RateTable<'a> {
    fn new(scenario: &'a Scenario, theta_init: &[f64]) -> Self {
        let budgets = scenario
            .sus()
            .iter()
            .zip(theta_init)
            .map(|(su, &th)| SlotBudget::new(su, th, scenario.params()))
            .collect();
        RateTable { scenario, budgets }
    }

    fn rate(&self, su: usize, j: usize) -> f64 {
        let params = self.scenario.params();
        let h = self.scenario.su(su).effective_gain(j, params);
        rate_from_budget(h, self.budgets[su], params.slot_duration)
    }

    /// Best sub-channel for `su` among `remaining`; ties go to the lower index
    /// because `remaining` is ascending and only strict improvements win.
    fn best_subchannel(&self, su: usize, remaining: &[usize]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (pos, &j) in remaining.iter().enumerate() {
            let r = self.rate(su, j);
            if r > best.1 {
                best = (pos, r);
            }
        }
        best
    }
}

/// Highest-EFM SU among `pool` (ties: lower id, as `pool` is ascending).
fn top_efm(scenario: &Scenario, pool: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in pool {
        let a = efm_factor(scenario.su(i));
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

fn check_inputs(scenario: &Scenario, theta_init: &[f64]) -> Result<()> {
    if theta_init.len() != scenario.num_sus() {
        return Err(Error::Precondition(format!(
            "{} initial ratios for {} SUs",
            theta_init.len(),
            scenario.num_sus()
        )));
    }
    Ok(())
}

/// EFM allocation, returning the final state and every step taken.
///
/// Phase 1 serves real-time SUs whose rate is still below `R^req`. Phase 2
/// hands every remaining sub-channel to the non-real-time SU with the highest
/// EFM (its `ζ` is not checked, so it keeps winning); with no non-real-time
/// SUs, the highest-EFM real-time SU absorbs the rest.
pub fn allocate_efm_traced(scenario: &Scenario, theta_init: &[f64]) -> Result<(EfmState, Vec<AllocationStep>)> {
    check_inputs(scenario, theta_init)?;
    let table = RateTable::new(scenario, theta_init);
    let k = scenario.num_sus();
    let mut state = EfmState {
        remaining: scenario.available().to_vec(),
        rates: vec![0.0; k],
        allocation: Allocation::empty(k),
        allocated_rt: Vec::new(),
        allocated_nrt: Vec::new(),
    };
    let mut trace = Vec::new();
    let rt: Vec<usize> = (0..k).filter(|&i| scenario.su(i).class.is_real_time()).collect();
    let nrt: Vec<usize> = (0..k).filter(|&i| !scenario.su(i).class.is_real_time()).collect();

    let mut give = |state: &mut EfmState, phase: Phase, su: usize, candidates: Vec<usize>| {
        let (pos, r) = table.best_subchannel(su, &state.remaining);
        let j = state.remaining.remove(pos);
        state.allocation.assign(su, j);
        state.rates[su] += r;
        trace.push(AllocationStep {
            phase,
            su,
            subchannel: j,
            efm: efm_factor(scenario.su(su)),
            candidates,
        });
    };

    while !state.remaining.is_empty() {
        let unsatisfied: Vec<usize> = rt
            .iter()
            .copied()
            .filter(|&i| state.rates[i] < scenario.su(i).rate_requirement)
            .collect();
        let Some(su) = top_efm(scenario, &unsatisfied) else {
            break;
        };
        give(&mut state, Phase::RealTime, su, unsatisfied);
    }

    let phase2_pool = if nrt.is_empty() { &rt } else { &nrt };
    if let Some(su) = top_efm(scenario, phase2_pool) {
        while !state.remaining.is_empty() {
            give(&mut state, Phase::NonRealTime, su, phase2_pool.clone());
        }
    }

    state.allocated_rt = rt
        .iter()
        .copied()
        .filter(|&i| state.allocation.is_allocated(i))
        .collect();
    state.allocated_nrt = nrt
        .iter()
        .copied()
        .filter(|&i| state.allocation.is_allocated(i))
        .collect();
    Ok((state, trace))
}

/// EFM-prioritized sub-channel allocation at the initial ratios `theta_init`.
pub fn allocate_efm(scenario: &Scenario, theta_init: &[f64]) -> Result<Allocation> {
    allocate_efm_traced(scenario, theta_init).map(|(state, _)| state.allocation)
}

/// Greedy max-rate allocation without EFM priority, used as a comparison.
///
/// Each step assigns the globally best `(SU, sub-channel)` pair among the
/// real-time SUs still below their requirement; afterwards the remaining
/// sub-channels go, again pair by pair, to the non-real-time SUs (or to all
/// real-time SUs when there are none). Ties: lower SU id, then lower index.
pub fn allocate_baseline(scenario: &Scenario, theta_init: &[f64]) -> Result<Allocation> {
    check_inputs(scenario, theta_init)?;
    let table = RateTable::new(scenario, theta_init);
    let k = scenario.num_sus();
    let mut remaining = scenario.available().to_vec();
    let mut rates = vec![0.0; k];
    let mut allocation = Allocation::empty(k);
    let rt: Vec<usize> = (0..k).filter(|&i| scenario.su(i).class.is_real_time()).collect();
    let nrt: Vec<usize> = (0..k).filter(|&i| !scenario.su(i).class.is_real_time()).collect();

    let best_pair = |pool: &[usize], remaining: &[usize]| {
        let mut best: Option<(usize, usize, f64)> = None;
        for &i in pool {
            let (pos, r) = table.best_subchannel(i, remaining);
            if best.is_none_or(|b| r > b.2) {
                best = Some((i, pos, r));
            }
        }
        best
    };

    while !remaining.is_empty() {
        let unsatisfied: Vec<usize> = rt
            .iter()
            .copied()
            .filter(|&i| rates[i] < scenario.su(i).rate_requirement)
            .collect();
        let Some((i, pos, r)) = best_pair(&unsatisfied, &remaining) else {
            break;
        };
        allocation.assign(i, remaining.remove(pos));
        rates[i] += r;
    }
    let pool = if nrt.is_empty() { &rt } else { &nrt };
    while !remaining.is_empty() {
        let Some((i, pos, _)) = best_pair(pool, &remaining) else {
            break;
        };
        allocation.assign(i, remaining.remove(pos));
    }
    Ok(allocation)
}

/// Number of real-time SUs whose rate at `theta` reaches `R^req`.
pub fn satisfied_rt_count(allocation: &Allocation, scenario: &Scenario, theta: &[f64]) -> usize {
    let params = scenario.params();
    scenario
        .sus()
        .iter()
        .enumerate()
        .filter(|(_, su)| su.class.is_real_time())
        .filter(|&(i, su)| {
            let budget = SlotBudget::new(su, theta[i], params);
            let rate: f64 = allocation
                .subchannels(i)
                .iter()
                .map(|&j| rate_from_budget(su.effective_gain(j, params), budget, params.slot_duration))
                .sum();
            rate >= su.rate_requirement
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PrimaryUser, SensingModel, TrafficClass};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(n: usize) -> SystemParams {
        SystemParams {
            slot_duration: 1e-3,
            subchannel_bandwidth: 62.5e3,
            noise_psd: 1.6e-18,
            snr_gap: 1.0,
            symbol_duration: 1.6e-5,
            start_frequency: 2.4e9,
            num_subchannels: n,
        }
    }

    /// Builds a scenario where `hs[i][j]` is SU i's effective gain on j.
    fn scenario(users: &[(TrafficClass, f64, f64, f64)], hs: &[Vec<f64>]) -> Scenario {
        let n = hs[0].len();
        let p = params(n);
        let noise = p.noise_power();
        let sus = users
            .iter()
            .zip(hs)
            .enumerate()
            .map(|(id, (&(class, chi, eps, req), h))| SecondaryUser {
                id,
                class,
                harvest_rate: chi,
                sensing_energy: eps,
                sensing_time: 10e-6,
                rate_requirement: req,
                gains: h.iter().map(|x| (x * noise).sqrt()).collect(),
                cross_gains: vec![vec![1e-9]; n],
                pu_interference: 0.0,
            })
            .collect();
        let pu = PrimaryUser {
            id: 0,
            interference_threshold: 1e-12,
            available_subchannels: (0..n).collect(),
            unavailable_subchannels: vec![],
        };
        let sensing = SensingModel {
            prior: vec![0.3; n],
            miss: vec![0.02; n],
            false_alarm: vec![0.07; n],
            available: (0..n).collect(),
        };
        Scenario::new(p, sus, vec![pu], sensing).unwrap()
    }

    use TrafficClass::{NonRealTime as Nrt, RealTime as Rt};

    #[test]
    fn initial_theta_examples() {
        let s = scenario(&[(Rt, 5.0, 1e-3, 1.0)], &[vec![1.0]]);
        assert_relative_eq!(initial_theta(s.su(0), s.params()).unwrap(), 0.595, max_relative = 1e-14);

        let mut su = s.su(0).clone();
        su.sensing_energy = 0.0;
        su.sensing_time = 1e-15;
        assert_relative_eq!(initial_theta(&su, s.params()).unwrap(), 0.5, max_relative = 1e-9);

        su.sensing_energy = 1.0;
        assert!(matches!(
            initial_theta(&su, s.params()),
            Err(Error::InfeasibleUser { .. })
        ));
    }

    #[test]
    fn efm_examples() {
        let s = scenario(&[(Rt, 20.0, 20.0 / 3060.0, 1.0)], &[vec![1.0]]);
        assert_relative_eq!(efm_factor(s.su(0)), 3060.0, max_relative = 1e-12);
        let mut su = s.su(0).clone();
        su.harvest_rate = 1.0;
        su.sensing_energy = 1.0;
        assert_eq!(efm_factor(&su), 1.0);
        su.sensing_energy = 0.0;
        assert_eq!(efm_factor(&su), f64::INFINITY);
    }

    #[test]
    fn single_rt_user_takes_everything() {
        let s = scenario(&[(Rt, 5.0, 1e-3, 100.0)], &[vec![3.0, 9.0]]);
        let a = allocate_efm(&s, &initial_thetas(&s).unwrap()).unwrap();
        assert_eq!(a.subchannels(0), &[0, 1]);
    }

    /// Straight-line transcription of the two loops, used as an oracle.
    fn hand_efm(hs: &[Vec<f64>], users: &[(TrafficClass, f64, f64, f64)], theta: &[f64]) -> Vec<Vec<usize>> {
        let t = 1e-3;
        let tau = 10e-6;
        let r = |i: usize, j: usize| {
            let (_, chi, eps, _) = users[i];
            let a = t - theta[i] * t - tau;
            let b = chi * theta[i] * t - eps;
            (a / t) * (1.0 + hs[i][j] * b / a).log2()
        };
        let alpha = |i: usize| users[i].1 / users[i].2;
        let mut left: Vec<usize> = (0..hs[0].len()).collect();
        let mut sets = vec![vec![]; users.len()];
        let mut rate = vec![0.0; users.len()];
        loop {
            let mut pick: Option<usize> = None;
            for i in 0..users.len() {
                if users[i].0 == Rt && rate[i] < users[i].3 && (pick.is_none() || alpha(i) > alpha(pick.unwrap())) {
                    pick = Some(i);
                }
            }
            if left.is_empty() || pick.is_none() {
                break;
            }
            let i = pick.unwrap();
            let mut best = 0;
            for p in 1..left.len() {
                if r(i, left[p]) > r(i, left[best]) {
                    best = p;
                }
            }
            rate[i] += r(i, left[best]);
            sets[i].push(left.remove(best));
        }
        let mut pick: Option<usize> = None;
        let has_nrt = users.iter().any(|u| u.0 == Nrt);
        for i in 0..users.len() {
            if (users[i].0 == Nrt) == has_nrt && (pick.is_none() || alpha(i) > alpha(pick.unwrap())) {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            sets[i].append(&mut left);
        }
        for s in &mut sets {
            s.sort();
        }
        sets
    }

    #[test]
    fn two_users_four_subchannels_hand_trace() {
        let users = [(Rt, 5.0, 1e-3, 2.0), (Rt, 8.0, 1e-3, 2.5)];
        let hs = vec![vec![400.0, 30.0, 900.0, 50.0], vec![20.0, 700.0, 60.0, 300.0]];
        let s = scenario(&users, &hs);
        let theta = initial_thetas(&s).unwrap();
        let a = allocate_efm(&s, &theta).unwrap();
        assert_eq!(a.sets(), hand_efm(&hs, &users, &theta).as_slice());
        // SU 1 (α = 8000) is served first and takes its best channel, 1.
        let (_, trace) = allocate_efm_traced(&s, &theta).unwrap();
        assert_eq!((trace[0].su, trace[0].subchannel), (1, 1));
    }

    #[test]
    fn baseline_hand_trace() {
        // SU 0 (low α) owns the single best pair, so the baseline serves it
        // first while EFM starts with SU 1.
        let users = [(Rt, 5.0, 1e-3, 1.0), (Rt, 8.0, 1e-3, 1.0)];
        let hs = vec![vec![5000.0, 10.0, 10.0], vec![100.0, 90.0, 80.0]];
        let s = scenario(&users, &hs);
        let theta = initial_thetas(&s).unwrap();
        let base = allocate_baseline(&s, &theta).unwrap();
        // step 1: (0, 0) with the largest rate; SU 0 is then satisfied
        // step 2: SU 1 takes 1; step 3: all satisfied, no NRT → best pair
        // among all RT is SU 1 on 2
        let r = |i: usize, j: usize| {
            let t = 1e-3;
            let (chi, eps) = (users[i].1, users[i].2);
            let a = t - theta[i] * t - 10e-6;
            (a / t) * (1.0 + hs[i][j] * (chi * theta[i] * t - eps) / a).log2()
        };
        assert!(r(0, 0) >= 1.0 && r(1, 1) >= 1.0);
        assert_eq!(base.sets(), &[vec![0], vec![1, 2]]);
    }

    #[test]
    fn nrt_users_get_the_leftovers() {
        let users = [(Rt, 5.0, 1e-3, 0.5), (Nrt, 9.0, 1e-3, 3.0), (Nrt, 7.0, 1e-3, 3.0)];
        let hs = vec![vec![100.0; 5], vec![50.0; 5], vec![500.0; 5]];
        let s = scenario(&users, &hs);
        let theta = initial_thetas(&s).unwrap();
        let (state, trace) = allocate_efm_traced(&s, &theta).unwrap();
        assert_eq!(state.allocation.sets(), hand_efm(&hs, &users, &theta).as_slice());
        assert_eq!(state.allocated_rt, vec![0]);
        assert_eq!(state.allocated_nrt, vec![1]);
        assert!(trace.iter().skip(1).all(|s| s.phase == Phase::NonRealTime));
    }

    #[test]
    fn satisfied_count_examples() {
        let users = [(Rt, 5.0, 1e-3, 0.0), (Rt, 8.0, 1e-3, 0.0), (Nrt, 8.0, 1e-3, 0.0)];
        let s = scenario(&users, &[vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]]);
        let theta = initial_thetas(&s).unwrap();
        assert_eq!(satisfied_rt_count(&Allocation::empty(3), &s, &theta), 2);
        let demanding = s.map_sus(|su| su.rate_requirement = 1.0).unwrap();
        assert_eq!(satisfied_rt_count(&Allocation::empty(3), &demanding, &theta), 0);
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<(TrafficClass, f64, f64, f64)>, Vec<Vec<f64>>)> {
        (1usize..5, 1usize..8).prop_flat_map(|(k, m)| {
            (
                prop::collection::vec(
                    (any::<bool>(), 1.0f64..20.0, 1e-4f64..1e-3, 0.0f64..6.0)
                        .prop_map(|(rt, chi, eps, req)| (if rt { Rt } else { Nrt }, chi, eps, req)),
                    k,
                ),
                prop::collection::vec(prop::collection::vec(0.5f64..2000.0, m), k),
            )
        })
    }

    proptest! {
        #[test]
        fn efm_invariants((users, hs) in arb_instance()) {
            let s = scenario(&users, &hs);
            let theta = initial_thetas(&s).unwrap();
            let (state, trace) = allocate_efm_traced(&s, &theta).unwrap();
            let a = &state.allocation;
            a.validate(s.available()).unwrap();
            prop_assert_eq!(a.assigned_count(), s.available().len());
            prop_assert!(state.remaining.is_empty());
            let hand = hand_efm(&hs, &users, &theta);
            prop_assert_eq!(a.sets(), hand.as_slice());
            for step in trace.iter().filter(|st| st.phase == Phase::RealTime) {
                for &c in &step.candidates {
                    prop_assert!(step.efm >= efm_factor(s.su(c)));
                }
            }
            for i in 0..users.len() {
                let direct = crate::model::total_rate(s.su(i), a.subchannels(i), theta[i], s.params()).unwrap();
                prop_assert!((state.rates[i] - direct).abs() <= 1e-9 * direct.max(1.0));
            }
            prop_assert_eq!(allocate_efm(&s, &theta).unwrap(), a.clone());
        }

        #[test]
        fn baseline_is_a_partition((users, hs) in arb_instance()) {
            let s = scenario(&users, &hs);
            let theta = initial_thetas(&s).unwrap();
            let a = allocate_baseline(&s, &theta).unwrap();
            a.validate(s.available()).unwrap();
            prop_assert_eq!(a.assigned_count(), s.available().len());
            prop_assert_eq!(allocate_baseline(&s, &theta).unwrap(), a);
        }
    }
}
