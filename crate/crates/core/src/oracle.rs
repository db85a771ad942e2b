//! Brute-force reference solvers.
//!
//! Nothing here calls into the rate, budget or solver code of the other
//! modules: rates and powers are re-derived from the raw SU fields, and
//! optimization is plain grid evaluation plus golden-section refinement.
//! The interference weights are read from the scenario's table since they
//! are data, not a solver output.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Allocation, Scenario, SecondaryUser, SystemParams};
use crate::par::Execution;
use crate::structopt::{SolveFlag, SolveMethod, SolveReport};

/// Resolution of the oracle grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Samples over the guarded interval of a single SU.
    pub points: usize,
    /// Golden-section steps around the best sample.
    pub refine_iterations: usize,
    /// Samples per SU for joint (coupled) solves.
    pub joint_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 10_001,
            refine_iterations: 80,
            joint_points: 201,
        }
    }
}

impl GridSpec {
    fn check(&self) -> Result<()> {
        if self.points < 3 || self.joint_points < 3 {
            return Err(Error::Config(format!("grid needs at least 3 points, got {self:?}")));
        }
        Ok(())
    }

    /// Width of the final bracket of a single-SU search over an interval of
    /// width `width`: two grid steps shrunk by the golden ratio per step.
    /// Function-value comparisons add a floor of about `sqrt(eps)` relative.
    pub fn bracket_width(&self, width: f64) -> f64 {
        2.0 * width / (self.points - 1) as f64 * INV_PHI.powi(self.refine_iterations as i32)
    }

    /// Spacing of a joint-solve grid over `[lo, peak]`: the worst-case
    /// distance of the joint optimum's coordinates from the true one.
    pub fn joint_spacing(&self, span: f64) -> f64 {
        span / (self.joint_points - 1) as f64
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of [`grid_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub x: f64,
    pub value: f64,
    /// The objective did not vary over the grid; `x` is the midpoint.
    pub flat: bool,
}

/// Maximizes `f` on `[lo, hi]` by dense sampling followed by golden-section
/// refinement between the neighbours of the best sample. Ties between samples
/// go to the lowest one.
pub fn grid_maximize(lo: f64, hi: f64, grid: &GridSpec, f: impl Fn(f64) -> f64) -> GridMax {
    let n = grid.points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let at = |k: usize| if k + 1 == n { hi } else { lo + k as f64 * step };
    let (mut best_k, mut best, mut worst) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..n {
        let v = f(at(k));
        if v > best {
            best = v;
            best_k = k;
        }
        worst = worst.min(v);
    }
    if best - worst <= 1e-15 * best.abs() || best == worst {
        let mid = 0.5 * (lo + hi);
        return GridMax {
            x: mid,
            value: f(mid),
            flat: true,
        };
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(n - 1));
    for _ in 0..grid.refine_iterations {
        let c = b - INV_PHI * (b - a);
        let d = a + INV_PHI * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v >= best {
        GridMax {
            x,
            value: v,
            flat: false,
        }
    } else {
        GridMax {
            x: at(best_k),
            value: best,
            flat: false,
        }
    }
}

/// One SU's numbers, re-derived from its raw fields.
struct Literal<'a> {
    su: &'a SecondaryUser,
    t: f64,
    /// `H_{i,j}` of the sub-channels considered.
    hs: Vec<f64>,
}

impl<'a> Literal<'a> {
    fn new(su: &'a SecondaryUser, subchannels: &[usize], params: &SystemParams) -> Self {
        let noise = params.subchannel_bandwidth * params.noise_psd + su.pu_interference;
        let hs = subchannels
            .iter()
            .map(|&j| su.gains[j].powi(2) / (params.snr_gap * noise))
            .collect();
        Literal {
            su,
            t: params.slot_duration,
            hs,
        }
    }

    /// Guarded `(ε/(χT), (T − τ)/T)`.
    fn interval(&self) -> Option<(f64, f64)> {
        let lo = self.su.sensing_energy / (self.su.harvest_rate * self.t);
        let hi = 1.0 - self.su.sensing_time / self.t;
        if lo >= hi {
            return None;
        }
        let d = 1e-9 * (hi - lo);
        Some((lo + d, hi - d))
    }

    fn power(&self, theta: f64) -> f64 {
        let energy = self.su.harvest_rate * theta * self.t - self.su.sensing_energy;
        let time = self.t - theta * self.t - self.su.sensing_time;
        if time <= 0.0 {
            f64::INFINITY
        } else {
            energy.max(0.0) / time
        }
    }

    /// `Σ_j (1 − θ − τ/T)·log₂(1 + H_j·p(θ))`.
    fn rate(&self, theta: f64) -> f64 {
        let share = 1.0 - theta - self.su.sensing_time / self.t;
        let p = self.power(theta);
        if share <= 0.0 || p <= 0.0 || !p.is_finite() {
            return 0.0;
        }
        self.hs.iter().map(|h| share * (1.0 + h * p).log2()).sum()
    }
}

/// Result of [`grid_theta_optimum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTheta {
    pub theta: f64,
    /// Rate sum at `theta` (bits/s/Hz).
    pub rate: f64,
    pub flat: bool,
}

/// Grid-search maximizer of one SU's rate sum over `subchannels`.
pub fn grid_theta_optimum(
    su: &SecondaryUser,
    subchannels: &[usize],
    params: &SystemParams,
    grid: &GridSpec,
) -> Result<GridTheta> {
    grid.check()?;
    let lit = Literal::new(su, subchannels, params);
    let (lo, hi) = lit.interval().ok_or_else(|| Error::InfeasibleUser {
        su: su.id,
        lower: su.sensing_energy / (su.harvest_rate * params.slot_duration),
        upper: 1.0 - su.sensing_time / params.slot_duration,
    })?;
    let m = grid_maximize(lo, hi, grid, |x| lit.rate(x));
    Ok(GridTheta {
        theta: m.x,
        rate: m.value,
        flat: m.flat,
    })
}

/// `Σ_{ℓ∈D} I_{i,ℓ,m}` per PU.
fn load_weights(scenario: &Scenario, su: usize, set: &[usize]) -> Vec<f64> {
    (0..scenario.num_pus())
        .map(|m| set.iter().map(|&l| scenario.interference_weight(su, l, m)).sum())
        .collect()
}

/// One dynamic-programming state: accumulated value and PU loads.
#[derive(Clone)]
struct State {
    value: f64,
    loads: Vec<f64>,
    /// Index of the parent state and of the candidate taken at this stage.
    parent: usize,
    pick: usize,
}

const FRONT_CAP: usize = 20_000;

/// Largest number of coupled SUs searched over the joint product grid; larger
/// instances go through [`multiplier_search`].
pub const JOINT_GRID_MAX_SUS: usize = 6;

/// Drops states that another state beats on value without a higher load on
/// any PU.
fn pareto_prune(mut states: Vec<State>) -> Result<Vec<State>> {
    states.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.loads.partial_cmp(&b.loads).unwrap_or(Ordering::Equal))
            .then_with(|| (a.parent, a.pick).cmp(&(b.parent, b.pick)))
    });
    let mut kept: Vec<State> = Vec::new();
    if states.first().is_some_and(|s| s.loads.len() == 1) {
        let mut min_load = f64::INFINITY;
        for s in states {
            if s.loads[0] < min_load {
                min_load = s.loads[0];
                kept.push(s);
                if kept.len() > FRONT_CAP {
                    return Err(Error::TooLarge(format!("joint grid front exceeds {FRONT_CAP} states")));
                }
            }
        }
        return Ok(kept);
    }
    for s in states {
        let dominated = kept.iter().any(|k| k.loads.iter().zip(&s.loads).all(|(a, b)| a <= b));
        if !dominated {
            kept.push(s);
            if kept.len() > FRONT_CAP {
                return Err(Error::TooLarge(format!("joint grid front exceeds {FRONT_CAP} states")));
            }
        }
    }
    Ok(kept)
}

/// Best feasible harvesting ratios over a product grid.
///
/// Each allocated SU first gets its fine-grid optimum. If that vector meets
/// every constraint it is returned as is (the SUs decouple). Otherwise every
/// SU contributes `joint_points` samples of `[lo, θ_peak]` that meet its rate
/// requirement (larger ratios only add interference and lose rate), and the
/// product grid is searched exactly by a Pareto dynamic program over the PU
/// loads. The joint coordinates are therefore accurate to
/// [`GridSpec::joint_spacing`] of each SU's span.
///
/// More than [`JOINT_GRID_MAX_SUS`] coupled SUs, or a Pareto front that
/// outgrows its cap, switch to a multiplier search on the continuous problem.
///
/// A report with the `EmptyFeasibleSet` flag and `converged == false` is
/// returned when no grid point is feasible.
pub fn constrained_grid_solve(scenario: &Scenario, allocation: &Allocation, grid: &GridSpec) -> Result<SolveReport> {
    joint_solve(scenario, allocation, grid, JOINT_GRID_MAX_SUS)
}

fn joint_solve(scenario: &Scenario, allocation: &Allocation, grid: &GridSpec, max_joint: usize) -> Result<SolveReport> {
    grid.check()?;
    let params = scenario.params();
    let k = scenario.num_sus();
    if allocation.num_sus() != k {
        return Err(Error::Precondition(format!(
            "allocation covers {} SUs, scenario has {k}",
            allocation.num_sus()
        )));
    }
    let lits: Vec<Literal> = (0..k)
        .map(|i| Literal::new(scenario.su(i), allocation.subchannels(i), params))
        .collect();
    let mut theta = Vec::with_capacity(k);
    let mut lows = Vec::with_capacity(k);
    for (i, lit) in lits.iter().enumerate() {
        let (lo, hi) = lit.interval().ok_or_else(|| Error::InfeasibleUser {
            su: i,
            lower: scenario.theta_interval(i).lower,
            upper: scenario.theta_interval(i).upper,
        })?;
        if allocation.is_allocated(i) {
            theta.push(grid_maximize(lo, hi, grid, |x| lit.rate(x)).x);
        } else {
            theta.push(0.5 * (lo + hi));
        }
        lows.push(lo);
    }

    let active: Vec<usize> = allocation.allocated_sus().collect();
    let weights: Vec<Vec<f64>> = (0..k)
        .map(|i| load_weights(scenario, i, allocation.subchannels(i)))
        .collect();
    let thresholds: Vec<f64> = scenario.pus().iter().map(|p| p.interference_threshold).collect();
    let loads_at = |i: usize, th: f64| -> Vec<f64> {
        let p = lits[i].power(th);
        weights[i].iter().map(|w| if *w > 0.0 { p * w } else { 0.0 }).collect()
    };
    let meets_rate = |i: usize, r: f64| r >= scenario.su(i).rate_requirement;

    let peak_ok = active.iter().all(|&i| meets_rate(i, lits[i].rate(theta[i])))
        && (0..thresholds.len())
            .all(|m| active.iter().map(|&i| loads_at(i, theta[i])[m]).sum::<f64>() <= thresholds[m]);
    if peak_ok {
        return Ok(grid_report(scenario, allocation, &lits, theta, 1, Vec::new()));
    }
    if active.len() > max_joint {
        return multiplier_search(scenario, allocation, &lits, theta, &lows, &weights, &thresholds);
    }

    // candidate samples per active SU, ascending in θ, so value and load rise together
    let mut cands: Vec<Vec<(f64, f64)>> = Vec::with_capacity(active.len());
    for &i in &active {
        let (lo, peak) = (lows[i], theta[i]);
        let n = grid.joint_points;
        let list: Vec<(f64, f64)> = (0..n)
            .map(|s| {
                if s + 1 == n {
                    peak
                } else {
                    lo + (peak - lo) * s as f64 / (n - 1) as f64
                }
            })
            .map(|x| (x, lits[i].rate(x)))
            .filter(|&(_, r)| meets_rate(i, r))
            .collect();
        if list.is_empty() {
            return Ok(empty_report(scenario, allocation, &lits, theta));
        }
        cands.push(list);
    }

    let num_pus = thresholds.len();
    let mut stages: Vec<Vec<State>> = Vec::with_capacity(active.len());
    let mut front = vec![State {
        value: 0.0,
        loads: vec![0.0; num_pus],
        parent: 0,
        pick: 0,
    }];
    let mut evaluated = 0usize;
    for (stage, &i) in active.iter().enumerate() {
        let mut next = Vec::with_capacity(front.len() * cands[stage].len());
        let cand_loads: Vec<Vec<f64>> = cands[stage].iter().map(|&(x, _)| loads_at(i, x)).collect();
        for (pi, s) in front.iter().enumerate() {
            for (ci, &(_, r)) in cands[stage].iter().enumerate() {
                evaluated += 1;
                let loads: Vec<f64> = s.loads.iter().zip(&cand_loads[ci]).map(|(a, b)| a + b).collect();
                if loads.iter().zip(&thresholds).any(|(l, t)| l > t) {
                    continue;
                }
                next.push(State {
                    value: s.value + r,
                    loads,
                    parent: pi,
                    pick: ci,
                });
            }
        }
        if next.is_empty() {
            return Ok(empty_report(scenario, allocation, &lits, theta));
        }
        stages.push(std::mem::take(&mut front));
        front = match pareto_prune(next) {
            Err(Error::TooLarge(_)) => {
                log::debug!("joint front overflow, switching to multiplier search");
                return multiplier_search(scenario, allocation, &lits, theta, &lows, &weights, &thresholds);
            }
            other => other?,
        };
    }
    stages.push(front);

    // the front is sorted by value, best first
    let mut idx = 0;
    for stage in (0..active.len()).rev() {
        let s = &stages[stage + 1][idx];
        theta[active[stage]] = cands[stage][s.pick].0;
        idx = s.parent;
    }
    Ok(grid_report(scenario, allocation, &lits, theta, evaluated, Vec::new()))
}

const SUB_GRID: GridSpec = GridSpec {
    points: 201,
    refine_iterations: 60,
    joint_points: 3,
};

/// Smallest ratio in `[lo, peak]` and largest in `[peak, hi]` whose rate is
/// at least `req`, or `None` when even the peak falls short.
fn rate_domain(lit: &Literal, lo: f64, peak: f64, hi: f64, req: f64) -> Option<(f64, f64)> {
    if req <= 0.0 {
        return Some((lo, hi));
    }
    if lit.rate(peak) < req {
        return None;
    }
    let ok = |x: f64| lit.rate(x) >= req;
    let a = if ok(lo) {
        lo
    } else {
        let (mut l, mut r) = (lo, peak);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if ok(m) {
                r = m
            } else {
                l = m
            }
        }
        r
    };
    let b = if ok(hi) {
        hi
    } else {
        let (mut l, mut r) = (peak, hi);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if ok(m) {
                l = m
            } else {
                r = m
            }
        }
        l
    };
    Some((a, b))
}

struct Multipliers<'a, 'b> {
    lits: Vec<&'a Literal<'b>>,
    domains: Vec<(f64, f64)>,
    peaks: Vec<f64>,
    /// Load weight per SU and PU, divided by the PU threshold.
    weights: Vec<Vec<f64>>,
    evaluations: std::cell::Cell<usize>,
}

impl Multipliers<'_, '_> {
    /// Per-SU maximizer of `rate − penalty·power` over the rate domain.
    fn thetas(&self, mu: &[f64]) -> Vec<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        (0..self.lits.len())
            .map(|s| {
                let (a, b) = self.domains[s];
                let pen: f64 = mu.iter().zip(&self.weights[s]).map(|(u, w)| u * w).sum();
                if pen == 0.0 && (a..=b).contains(&self.peaks[s]) {
                    return self.peaks[s];
                }
                let lit = self.lits[s];
                grid_maximize(a, b, &SUB_GRID, |x| lit.rate(x) - pen * lit.power(x)).x
            })
            .collect()
    }

    fn load(&self, th: &[f64], m: usize) -> f64 {
        th.iter()
            .enumerate()
            .filter(|&(s, _)| self.weights[s][m] > 0.0)
            .map(|(s, &x)| self.weights[s][m] * self.lits[s].power(x))
            .sum()
    }

    /// Fixes `mu[m..]` so that PUs `m..` are within their thresholds, the
    /// multiplier of each PU being the smallest one that does so.
    fn level(&self, m: usize, mu: &mut Vec<f64>) -> Vec<f64> {
        if m == mu.len() {
            return self.thetas(mu);
        }
        mu[m] = 0.0;
        let th = self.level(m + 1, mu);
        if self.load(&th, m) <= 1.0 {
            return th;
        }
        let mut hi = 1.0;
        loop {
            mu[m] = hi;
            let th = self.level(m + 1, mu);
            if self.load(&th, m) <= 1.0 || hi > 1e30 {
                break;
            }
            hi *= 4.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            mu[m] = 0.5 * (lo + hi);
            let th = self.level(m + 1, mu);
            if self.load(&th, m) <= 1.0 {
                hi = mu[m];
            } else {
                lo = mu[m];
            }
        }
        mu[m] = hi;
        self.level(m + 1, mu)
    }
}

/// Coupled solve for instances too large for the joint grid.
///
/// The problem is concave in each ratio with convex loads, so a KKT point is
/// the optimum. Rate requirements become bounds on each ratio; the PU
/// thresholds are priced by one multiplier each, found by nested bisection
/// (complementary slackness: a multiplier is zero unless its PU is at the
/// threshold). Each SU's priced problem is a one-dimensional grid search.
fn multiplier_search(
    scenario: &Scenario,
    allocation: &Allocation,
    lits: &[Literal],
    mut theta: Vec<f64>,
    lows: &[f64],
    weights: &[Vec<f64>],
    thresholds: &[f64],
) -> Result<SolveReport> {
    let active: Vec<usize> = allocation.allocated_sus().collect();
    let mut domains = Vec::with_capacity(active.len());
    for &i in &active {
        let hi = lits[i].interval().map_or(theta[i], |(_, h)| h);
        match rate_domain(&lits[i], lows[i], theta[i], hi, scenario.su(i).rate_requirement) {
            Some(d) => domains.push(d),
            None => return Ok(empty_report(scenario, allocation, lits, theta)),
        }
    }
    let search = Multipliers {
        lits: active.iter().map(|&i| &lits[i]).collect(),
        domains,
        peaks: active.iter().map(|&i| theta[i]).collect(),
        weights: active
            .iter()
            .map(|&i| weights[i].iter().zip(thresholds).map(|(w, t)| w / t).collect())
            .collect(),
        evaluations: std::cell::Cell::new(0),
    };
    let floor: Vec<f64> = search.domains.iter().map(|d| d.0).collect();
    if (0..thresholds.len()).any(|m| search.load(&floor, m) > 1.0) {
        return Ok(empty_report(scenario, allocation, lits, theta));
    }
    let mut mu = vec![0.0; thresholds.len()];
    let th = search.level(0, &mut mu);
    for (s, &i) in active.iter().enumerate() {
        theta[i] = th[s];
    }
    let iterations = search.evaluations.get();
    Ok(grid_report(scenario, allocation, lits, theta, iterations, Vec::new()))
}

fn grid_report(
    scenario: &Scenario,
    allocation: &Allocation,
    lits: &[Literal],
    theta: Vec<f64>,
    iterations: usize,
    flags: Vec<SolveFlag>,
) -> SolveReport {
    let objective = allocation.allocated_sus().map(|i| lits[i].rate(theta[i])).sum();
    let mut worst = 0.0f64;
    for i in allocation.allocated_sus() {
        let req = scenario.su(i).rate_requirement;
        if req > 0.0 {
            worst = worst.max((req - lits[i].rate(theta[i])) / req);
        }
    }
    for (m, pu) in scenario.pus().iter().enumerate() {
        let load: f64 = allocation
            .allocated_sus()
            .map(|i| {
                let w: f64 = allocation
                    .subchannels(i)
                    .iter()
                    .map(|&l| scenario.interference_weight(i, l, m))
                    .sum();
                if w > 0.0 {
                    lits[i].power(theta[i]) * w
                } else {
                    0.0
                }
            })
            .sum();
        worst = worst.max((load - pu.interference_threshold) / pu.interference_threshold);
    }
    SolveReport {
        theta,
        objective,
        iterations,
        converged: worst <= 0.0,
        max_constraint_violation: worst,
        method: SolveMethod::GridOracle,
        flags,
    }
}

fn empty_report(scenario: &Scenario, allocation: &Allocation, lits: &[Literal], theta: Vec<f64>) -> SolveReport {
    let mut r = grid_report(scenario, allocation, lits, theta, 0, vec![SolveFlag::EmptyFeasibleSet]);
    r.converged = false;
    r
}

/// Largest enumeration accepted by [`exhaustive_allocation`].
pub const MAX_ASSIGNMENTS: u64 = 10_000_000;

/// Per-SU, per-subset numbers used by the enumeration.
struct SubsetTable {
    /// `[su][mask]` → (rate, θ, loads).
    entries: Vec<Vec<(f64, f64, Vec<f64>)>>,
}

fn subset_table(scenario: &Scenario, theta_init: &[f64], grid: &GridSpec, exec: Execution) -> Result<SubsetTable> {
    let avail = scenario.available();
    let masks = 1usize << avail.len();
    let params = scenario.params();
    let per_su = exec.map_range(scenario.num_sus(), |i| -> Result<Vec<(f64, f64, Vec<f64>)>> {
        let mut row = Vec::with_capacity(masks);
        for mask in 0..masks {
            let set: Vec<usize> = (0..avail.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| avail[b])
                .collect();
            if set.is_empty() {
                row.push((0.0, theta_init[i], vec![0.0; scenario.num_pus()]));
                continue;
            }
            let opt = grid_theta_optimum(scenario.su(i), &set, params, grid)?;
            let p = Literal::new(scenario.su(i), &set, params).power(opt.theta);
            let loads = load_weights(scenario, i, &set)
                .into_iter()
                .map(|w| if w > 0.0 { p * w } else { 0.0 })
                .collect();
            row.push((opt.rate, opt.theta, loads));
        }
        Ok(row)
    });
    Ok(SubsetTable {
        entries: per_su.into_iter().collect::<Result<_>>()?,
    })
}

/// Every assignment of the available sub-channels to SUs, each SU at its
/// grid-optimal ratio for its set; the best one meeting every rate
/// requirement and interference threshold wins (ties go to the
/// lexicographically first assignment).
pub fn exhaustive_allocation(scenario: &Scenario, theta_init: &[f64]) -> Result<(Allocation, f64)> {
    exhaustive_allocation_with(scenario, theta_init, &GridSpec::default(), Execution::default())
}

pub fn exhaustive_allocation_with(
    scenario: &Scenario,
    theta_init: &[f64],
    grid: &GridSpec,
    exec: Execution,
) -> Result<(Allocation, f64)> {
    enumerate(scenario, theta_init, grid, exec, false)
}

fn assignment_count(k: usize, m: usize) -> Option<u64> {
    (k as u64).checked_pow(m as u32)
}

fn enumerate(
    scenario: &Scenario,
    theta_init: &[f64],
    grid: &GridSpec,
    exec: Execution,
    reverse: bool,
) -> Result<(Allocation, f64)> {
    grid.check()?;
    let k = scenario.num_sus();
    let avail = scenario.available();
    let m = avail.len();
    if theta_init.len() != k {
        return Err(Error::Precondition(format!(
            "expected {k} initial ratios, got {}",
            theta_init.len()
        )));
    }
    if k == 0 {
        return Err(Error::Precondition("scenario has no SUs".into()));
    }
    let total = assignment_count(k, m)
        .filter(|&n| n <= MAX_ASSIGNMENTS && m < 24)
        .ok_or_else(|| Error::TooLarge(format!("{k}^{m} assignments exceed {MAX_ASSIGNMENTS}")))?;
    let table = subset_table(scenario, theta_init, grid, exec)?;
    let thresholds: Vec<f64> = scenario.pus().iter().map(|p| p.interference_threshold).collect();
    let reqs: Vec<f64> = scenario.sus().iter().map(|s| s.rate_requirement).collect();

    let evaluate = |index: u64| -> Option<f64> {
        let mut masks = vec![0usize; k];
        let mut rest = index;
        for b in 0..m {
            masks[(rest % k as u64) as usize] |= 1 << b;
            rest /= k as u64;
        }
        let mut value = 0.0;
        let mut loads = vec![0.0; thresholds.len()];
        for (i, &mask) in masks.iter().enumerate() {
            let (rate, _, l) = &table.entries[i][mask];
            if *rate < reqs[i] {
                return None;
            }
            value += rate;
            for (acc, x) in loads.iter_mut().zip(l) {
                *acc += x;
            }
        }
        loads.iter().zip(&thresholds).all(|(l, t)| l <= t).then_some(value)
    };
    // larger value wins, then the smaller index
    let better = |a: Option<(u64, f64)>, b: Option<(u64, f64)>| match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
    };

    let chunk = 4096usize;
    let chunks = (total as usize).div_ceil(chunk);
    let per_chunk = exec.map_range(chunks, |c| {
        let c = if reverse { chunks - 1 - c } else { c };
        let start = (c * chunk) as u64;
        let end = (start + chunk as u64).min(total);
        let mut best = None;
        let mut step = |idx: u64| {
            if let Some(v) = evaluate(idx) {
                best = better(best, Some((idx, v)));
            }
        };
        if reverse {
            (start..end).rev().for_each(&mut step);
        } else {
            (start..end).for_each(&mut step);
        }
        best
    });
    let best = per_chunk.into_iter().fold(None, better);
    let (index, value) =
        best.ok_or_else(|| Error::NoSolution("no assignment meets every rate requirement and threshold".into()))?;

    let mut alloc = Allocation::empty(k);
    let mut rest = index;
    for &j in avail {
        alloc.assign((rest % k as u64) as usize, j);
        rest /= k as u64;
    }
    Ok((alloc, value))
}

/// Grid-optimal ratio of every SU for `allocation` (unconstrained), the
/// values [`exhaustive_allocation`] scores assignments with.
pub fn grid_thetas(
    scenario: &Scenario,
    allocation: &Allocation,
    theta_init: &[f64],
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    (0..scenario.num_sus())
        .map(|i| {
            if allocation.is_allocated(i) {
                Ok(grid_theta_optimum(scenario.su(i), allocation.subchannels(i), scenario.params(), grid)?.theta)
            } else {
                Ok(theta_init[i])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PrimaryUser, SensingModel, TrafficClass};

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

    fn su(id: usize, gains: Vec<f64>, req: f64, n_pus: usize) -> SecondaryUser {
        let n = gains.len();
        SecondaryUser {
            id,
            class: TrafficClass::RealTime,
            harvest_rate: 5.0,
            sensing_energy: 1e-3,
            sensing_time: 10e-6,
            rate_requirement: req,
            gains,
            cross_gains: vec![vec![1e-10; n_pus]; n],
            pu_interference: 0.0,
        }
    }

    fn scenario(sus: Vec<SecondaryUser>, threshold: f64) -> Scenario {
        let n = sus[0].gains.len();
        let p = params(n);
        let pu = PrimaryUser {
            id: 0,
            interference_threshold: threshold,
            available_subchannels: (0..n).collect(),
            unavailable_subchannels: vec![],
        };
        let sensing = SensingModel {
            prior: vec![0.5; n],
            miss: vec![0.03; n],
            false_alarm: vec![0.07; n],
            available: (0..n).collect(),
        };
        Scenario::new(p, sus, vec![pu], sensing).unwrap()
    }

    #[test]
    fn symmetric_objective_gives_midpoint() {
        let m = grid_maximize(0.0, 2.0, &GridSpec::default(), |x| -(x - 1.0) * (x - 1.0));
        assert!((m.x - 1.0).abs() < 1e-8 && !m.flat);
        let flat = grid_maximize(0.2, 0.6, &GridSpec::default(), |_| 0.0);
        assert!(flat.flat && (flat.x - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_gain_is_flat() {
        let s = su(0, vec![0.0], 0.0, 1);
        let g = grid_theta_optimum(&s, &[0], &params(1), &GridSpec::default()).unwrap();
        assert!(g.flat && g.rate == 0.0);
    }

    #[test]
    fn bracket_is_tiny() {
        assert!(GridSpec::default().bracket_width(1.0) < 1e-10);
    }

    #[test]
    fn unconstrained_instance_decouples() {
        let sc = scenario(
            vec![su(0, vec![1e-6, 2e-6], 0.0, 1), su(1, vec![3e-6, 1e-6], 0.0, 1)],
            1.0,
        );
        let alloc = Allocation::from_sets(vec![vec![0], vec![1]]);
        let r = constrained_grid_solve(&sc, &alloc, &GridSpec::default()).unwrap();
        for i in 0..2 {
            let g = grid_theta_optimum(sc.su(i), alloc.subchannels(i), sc.params(), &GridSpec::default()).unwrap();
            assert_eq!(r.theta[i], g.theta);
        }
        assert!(r.converged && r.method == SolveMethod::GridOracle);
    }

    #[test]
    fn binding_threshold_costs_rate() {
        let sus = vec![su(0, vec![1e-6, 2e-6], 0.0, 1), su(1, vec![3e-6, 1e-6], 0.0, 1)];
        let free = scenario(sus.clone(), 1.0);
        let alloc = Allocation::from_sets(vec![vec![0], vec![1]]);
        let open = constrained_grid_solve(&free, &alloc, &GridSpec::default()).unwrap();
        // a threshold at a third of the unconstrained load
        let load: f64 = (0..2)
            .map(|i| {
                let lit = Literal::new(free.su(i), alloc.subchannels(i), free.params());
                lit.power(open.theta[i]) * load_weights(&free, i, alloc.subchannels(i))[0]
            })
            .sum();
        let tight = scenario(sus, load / 3.0);
        let r = constrained_grid_solve(&tight, &alloc, &GridSpec::default()).unwrap();
        assert!(r.converged);
        assert!(r.objective < open.objective);
        assert!(r.max_constraint_violation <= 0.0);
        // brute force over the same per-SU candidate grids
        let cand = |i: usize| -> Vec<f64> {
            let lit = Literal::new(tight.su(i), alloc.subchannels(i), tight.params());
            let lo = lit.interval().unwrap().0;
            (0..201)
                .map(|s| {
                    if s == 200 {
                        open.theta[i]
                    } else {
                        lo + (open.theta[i] - lo) * s as f64 / 200.0
                    }
                })
                .collect()
        };
        let (c0, c1) = (cand(0), cand(1));
        let mut best = f64::NEG_INFINITY;
        for &a in &c0 {
            for &b in &c1 {
                let probe = grid_report(
                    &tight,
                    &alloc,
                    &[
                        Literal::new(tight.su(0), &[0], tight.params()),
                        Literal::new(tight.su(1), &[1], tight.params()),
                    ],
                    vec![a, b],
                    0,
                    vec![],
                );
                if probe.max_constraint_violation <= 0.0 {
                    best = best.max(probe.objective);
                }
            }
        }
        assert!((r.objective - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn multiplier_search_matches_joint_grid() {
        let sus: Vec<SecondaryUser> = (0..4)
            .map(|i| su(i, vec![(1.0 + i as f64) * 1e-6; 4], if i == 0 { 0.5 } else { 0.0 }, 1))
            .collect();
        let alloc = Allocation::from_sets(vec![vec![0], vec![1], vec![2], vec![3]]);
        let free = scenario(sus.clone(), 1.0);
        let open = constrained_grid_solve(&free, &alloc, &GridSpec::default()).unwrap();
        let load: f64 = (0..4)
            .map(|i| {
                let lit = Literal::new(free.su(i), alloc.subchannels(i), free.params());
                lit.power(open.theta[i]) * load_weights(&free, i, alloc.subchannels(i))[0]
            })
            .sum();
        let tight = scenario(sus, load / 4.0);
        let grid = joint_solve(&tight, &alloc, &GridSpec::default(), 8).unwrap();
        let priced = joint_solve(&tight, &alloc, &GridSpec::default(), 0).unwrap();
        assert!(grid.converged && priced.converged);
        // the continuous optimum is at least the grid one and within its spacing
        assert!(priced.objective >= grid.objective * (1.0 - 1e-9));
        assert!(priced.objective <= grid.objective * 1.01);
        assert!(priced.max_constraint_violation <= 0.0);
    }

    #[test]
    fn infeasible_requirements_report_empty_set() {
        let sc = scenario(vec![su(0, vec![1e-6], 1e3, 1)], 1.0);
        let alloc = Allocation::from_sets(vec![vec![0]]);
        let r = constrained_grid_solve(&sc, &alloc, &GridSpec::default()).unwrap();
        assert!(!r.converged && r.flags.contains(&SolveFlag::EmptyFeasibleSet));
    }

    fn small_grid() -> GridSpec {
        GridSpec {
            points: 501,
            refine_iterations: 60,
            joint_points: 51,
        }
    }

    #[test]
    fn single_su_takes_everything() {
        let sc = scenario(vec![su(0, vec![1e-6, 2e-6, 3e-6], 0.0, 1)], 1.0);
        let (alloc, _) = exhaustive_allocation_with(&sc, &[0.5], &small_grid(), Execution::Sequential).unwrap();
        assert_eq!(alloc.subchannels(0), &[0, 1, 2]);
    }

    #[test]
    fn dominant_su_wins_both() {
        let sc = scenario(
            vec![su(0, vec![1e-5, 1e-5], 0.0, 1), su(1, vec![1e-7, 1e-7], 0.0, 1)],
            1.0,
        );
        let (alloc, _) = exhaustive_allocation_with(&sc, &[0.5, 0.5], &small_grid(), Execution::Sequential).unwrap();
        // splitting gives SU 1 a rate far below what SU 0 would add
        assert_eq!(alloc.subchannels(0), &[0, 1]);
    }

    #[test]
    fn order_and_execution_do_not_matter() {
        let gains = |s: f64| (0..5).map(|j| s * (1.0 + 0.3 * j as f64)).collect::<Vec<_>>();
        let sus = vec![
            su(0, gains(1e-6), 1.0, 1),
            su(1, gains(2e-6), 1.0, 1),
            su(2, gains(5e-7), 0.5, 1),
        ];
        let sc = scenario(sus, 1e-9);
        let th = [0.5; 3];
        let g = small_grid();
        let fwd = enumerate(&sc, &th, &g, Execution::Sequential, false).unwrap();
        let rev = enumerate(&sc, &th, &g, Execution::Sequential, true).unwrap();
        let par = enumerate(&sc, &th, &g, Execution::Parallel, true).unwrap();
        assert_eq!(fwd, rev);
        assert_eq!(fwd, par);
    }

    #[test]
    fn size_guard() {
        let sus: Vec<_> = (0..4).map(|i| su(i, vec![1e-6; 12], 0.0, 1)).collect();
        let sc = scenario(sus, 1.0);
        assert!(matches!(exhaustive_allocation(&sc, &[0.5; 4]), Err(Error::TooLarge(_))));
    }
}
