//! Projected dual subgradient method for the constrained slot-structure
//! problem.
//!
//! The Lagrangian is minimized over `θ` SU by SU (each piece is a concave
//! maximization in one variable), then every multiplier takes a projected
//! step along its constraint's violation with a diminishing `c/t` step.

use serde::{Deserialize, Serialize};

use super::per_su::{maximize_weighted, Weights};
use crate::error::{Error, Result};
use crate::model::{evaluate_constraints, Allocation, ConstraintSlacks, Scenario, SlotBudget};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    ClosedForm,
    DualSubgradient,
    GridOracle,
}

impl SolveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMethod::ClosedForm => "closed-form",
            SolveMethod::DualSubgradient => "dual-subgradient",
            SolveMethod::GridOracle => "grid-oracle",
        }
    }
}

/// Diagnostics attached to a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SolveFlag {
    /// The closed form fell outside the guarded interval and was clamped.
    Projected { su: usize },
    /// No sub-channel had `Hχ > 1`; a scan was used instead of the closed form.
    ScanFallback { su: usize },
    /// The optimum sits on a guarded end point.
    Boundary { su: usize },
    /// The SU cannot reach its rate requirement even unconstrained.
    RateUnreachable { su: usize },
    /// Rate requirements conflict with the interference thresholds and were
    /// dropped before the dual solve.
    RatesRelaxed,
    /// The oracle found no feasible point.
    EmptyFeasibleSet,
}

/// Outcome of any of the slot-structure solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// One ratio per SU; SUs without sub-channels keep their initial ratio.
    pub theta: Vec<f64>,
    /// Sum rate over SUs holding sub-channels (bits/s/Hz).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest normalized constraint violation (0 when feasible).
    pub max_constraint_violation: f64,
    pub method: SolveMethod,
    pub flags: Vec<SolveFlag>,
}

impl SolveReport {
    /// Builds a report by evaluating `theta` against every constraint.
    pub fn evaluate(
        scenario: &Scenario,
        allocation: &Allocation,
        theta: Vec<f64>,
        method: SolveMethod,
        iterations: usize,
        tol_primal: f64,
        flags: Vec<SolveFlag>,
    ) -> Self {
        let slacks = evaluate_constraints(scenario, allocation, &theta);
        let violation = slacks.max_violation(scenario, allocation);
        SolveReport {
            objective: sum_rate(&slacks, allocation),
            theta,
            iterations,
            converged: violation <= tol_primal,
            max_constraint_violation: violation,
            method,
            flags,
        }
    }
}

pub(crate) fn sum_rate(slacks: &ConstraintSlacks, allocation: &Allocation) -> f64 {
    allocation.allocated_sus().map(|i| slacks.achieved_rate[i]).sum()
}

/// Base constants of the five `c/t` step schedules (for λ, μ, ν, ρ^R, ρ^N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub beta0: f64,
    pub pi0: f64,
    pub psi0: f64,
    pub eta0: f64,
}

impl StepSchedule {
    pub fn uniform(c: f64) -> Self {
        StepSchedule {
            alpha0: c,
            beta0: c,
            pi0: c,
            psi0: c,
            eta0: c,
        }
    }

    /// Steps at iteration `t ≥ 1`, in the order `[α, β, π, ψ, η]`.
    pub fn at(&self, t: usize) -> [f64; 5] {
        let t = t.max(1) as f64;
        [self.alpha0, self.beta0, self.pi0, self.psi0, self.eta0].map(|c| c / t)
    }

    /// Self-scaled schedule: each family gets `c·F₀/s²`, where `F₀` is the
    /// unconstrained sum rate and `s` the natural size of that constraint
    /// (`χT`, `T`, `I^th`, and the rate requirements). A multiplier step then
    /// moves the normalized multiplier `ν·s/F₀` by `c/t` times the normalized
    /// violation.
    pub fn scaled(c: f64, scales: &ConstraintScales) -> Self {
        let f = scales.objective;
        StepSchedule {
            alpha0: c * f / (scales.energy * scales.energy),
            beta0: c * f / (scales.time * scales.time),
            pi0: c * f / (scales.interference * scales.interference),
            psi0: c * f / (scales.rate_rt * scales.rate_rt),
            eta0: c * f / (scales.rate_nrt * scales.rate_nrt),
        }
    }
}

/// Natural magnitudes of the objective and of each constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintScales {
    pub objective: f64,
    pub energy: f64,
    pub time: f64,
    pub interference: f64,
    pub rate_rt: f64,
    pub rate_nrt: f64,
}

impl ConstraintScales {
    pub fn new(scenario: &Scenario, allocation: &Allocation, objective: f64) -> Self {
        let t = scenario.params().slot_duration;
        let allocated: Vec<usize> = allocation.allocated_sus().collect();
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            if n == 0 {
                None
            } else {
                Some(s / n as f64)
            }
        };
        let energy = mean(&mut allocated.iter().map(|&i| scenario.su(i).harvest_rate * t)).unwrap_or(1.0);
        let interference = mean(&mut scenario.pus().iter().map(|p| p.interference_threshold)).unwrap_or(1.0);
        let max_req = |rt: bool| {
            allocated
                .iter()
                .map(|&i| scenario.su(i))
                .filter(|s| s.class.is_real_time() == rt)
                .map(|s| s.rate_requirement)
                .fold(0.0f64, f64::max)
        };
        let positive = |x: f64| if x > 0.0 { x } else { 1.0 };
        ConstraintScales {
            objective: positive(objective),
            energy,
            time: t,
            interference,
            rate_rt: positive(max_req(true)),
            rate_nrt: positive(max_req(false)),
        }
    }
}

/// Lagrange multipliers and the iteration counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    /// C1 multipliers, per SU.
    pub lambda: Vec<f64>,
    /// C2 multipliers, per SU.
    pub mu: Vec<f64>,
    /// C3 multipliers, per PU.
    pub nu: Vec<f64>,
    /// C4 multipliers, per SU (zero for non-real-time SUs).
    pub rho_rt: Vec<f64>,
    /// C5 multipliers, per SU (zero for real-time SUs).
    pub rho_nrt: Vec<f64>,
    /// Index `t` of the next update (starts at 1).
    pub iteration: usize,
    pub schedule: StepSchedule,
}

impl DualState {
    pub fn zero(num_sus: usize, num_pus: usize, schedule: StepSchedule) -> Self {
        DualState {
            lambda: vec![0.0; num_sus],
            mu: vec![0.0; num_sus],
            nu: vec![0.0; num_pus],
            rho_rt: vec![0.0; num_sus],
            rho_nrt: vec![0.0; num_sus],
            iteration: 1,
            schedule,
        }
    }
}

/// Raw subgradients `∂L/∂(multiplier)` at `theta`.
struct Subgradients {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    nu: Vec<f64>,
    rho_rt: Vec<f64>,
    rho_nrt: Vec<f64>,
}

fn subgradients(theta: &[f64], scenario: &Scenario, allocation: &Allocation) -> Subgradients {
    let k = scenario.num_sus();
    let t = scenario.params().slot_duration;
    let slacks = evaluate_constraints(scenario, allocation, theta);
    let mut g = Subgradients {
        lambda: vec![0.0; k],
        mu: vec![0.0; k],
        nu: scenario
            .pus()
            .iter()
            .zip(&slacks.interference)
            .map(|(_, s)| -s)
            .collect(),
        rho_rt: vec![0.0; k],
        rho_nrt: vec![0.0; k],
    };
    for i in allocation.allocated_sus() {
        let su = scenario.su(i);
        g.lambda[i] = su.sensing_energy - su.harvest_rate * theta[i] * t;
        g.mu[i] = theta[i] * t + su.sensing_time - t;
        let shortfall = su.rate_requirement - slacks.achieved_rate[i];
        if su.class.is_real_time() {
            g.rho_rt[i] = shortfall;
        } else {
            g.rho_nrt[i] = shortfall;
        }
    }
    g
}

/// The Lagrangian: negated sum rate plus every multiplier times its
/// constraint function (written as `g(θ) ≤ 0`). The interference term uses
/// the per-sub-channel weights summed over each SU's set.
pub fn lagrangian_value(theta: &[f64], duals: &DualState, scenario: &Scenario, allocation: &Allocation) -> f64 {
    let g = subgradients(theta, scenario, allocation);
    let slacks = evaluate_constraints(scenario, allocation, theta);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    -sum_rate(&slacks, allocation)
        + dot(&duals.lambda, &g.lambda)
        + dot(&duals.mu, &g.mu)
        + dot(&duals.nu, &g.nu)
        + dot(&duals.rho_rt, &g.rho_rt)
        + dot(&duals.rho_nrt, &g.rho_nrt)
}

/// One projected subgradient step on every multiplier.
///
/// The dual function is minimized over `θ` and maximized over the
/// multipliers, so each multiplier moves *up* its constraint's violation:
/// `λ ← [λ + α(ε − χθT)]⁺` and likewise for μ, ν, ρ^R, ρ^N.
pub fn dual_update(duals: &DualState, theta: &[f64], scenario: &Scenario, allocation: &Allocation) -> DualState {
    let g = subgradients(theta, scenario, allocation);
    let [alpha, beta, pi, psi, eta] = duals.schedule.at(duals.iteration);
    let step =
        |m: &[f64], d: &[f64], s: f64| -> Vec<f64> { m.iter().zip(d).map(|(x, dx)| (x + s * dx).max(0.0)).collect() };
    DualState {
        lambda: step(&duals.lambda, &g.lambda, alpha),
        mu: step(&duals.mu, &g.mu, beta),
        nu: step(&duals.nu, &g.nu, pi),
        rho_rt: step(&duals.rho_rt, &g.rho_rt, psi),
        rho_nrt: step(&duals.rho_nrt, &g.rho_nrt, eta),
        iteration: duals.iteration + 1,
        schedule: duals.schedule,
    }
}

/// Settings of [`dual_subgradient_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    /// Multiplier `c` of the self-scaled `c/t` schedules.
    pub step_scale: f64,
    /// Largest normalized multiplier movement accepted as converged.
    pub tol_dual: f64,
    /// Largest normalized constraint violation accepted as feasible.
    pub tol_primal: f64,
    pub max_iterations: usize,
    pub execution: Execution,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            step_scale: 1.0,
            tol_dual: 1e-7,
            tol_primal: 1e-6,
            max_iterations: 50_000,
            execution: Execution::default(),
        }
    }
}

/// Maximizer of the Lagrangian's SU-`i` piece for fixed multipliers.
fn inner_theta(scenario: &Scenario, allocation: &Allocation, duals: &DualState, i: usize, init: f64) -> Result<f64> {
    let su = scenario.su(i);
    let set = allocation.subchannels(i);
    let hs = scenario.effective_gains(i, set);
    let t = scenario.params().slot_duration;
    let weights = scenario.aggregate_weights(i, set);
    let w = Weights {
        rate: 1.0 + duals.rho_rt[i] + duals.rho_nrt[i],
        linear: duals.lambda[i] * su.harvest_rate * t - duals.mu[i] * t,
        power: duals.nu.iter().zip(&weights).map(|(n, w)| n * w).sum(),
    };
    Ok(maximize_weighted(su, &hs, scenario.params(), w, Some(init))?.theta)
}

/// Unconstrained per-SU optima (rate sum only) for the allocated SUs; other
/// SUs keep `fallback`.
pub(crate) fn unconstrained_thetas(
    scenario: &Scenario,
    allocation: &Allocation,
    fallback: &[f64],
    exec: Execution,
) -> Result<Vec<f64>> {
    let out = exec.map_range(scenario.num_sus(), |i| -> Result<f64> {
        if !allocation.is_allocated(i) {
            return Ok(fallback[i]);
        }
        let hs = scenario.effective_gains(i, allocation.subchannels(i));
        Ok(maximize_weighted(scenario.su(i), &hs, scenario.params(), Weights::RATE_ONLY, None)?.theta)
    });
    out.into_iter().collect()
}

fn check_allocation(scenario: &Scenario, allocation: &Allocation) -> Result<()> {
    if allocation.num_sus() != scenario.num_sus() {
        return Err(Error::Precondition(format!(
            "allocation covers {} SUs, scenario has {}",
            allocation.num_sus(),
            scenario.num_sus()
        )));
    }
    allocation.validate(scenario.available())?;
    for i in allocation.allocated_sus() {
        let iv = scenario.theta_interval(i);
        if iv.is_empty() {
            return Err(Error::InfeasibleUser {
                su: i,
                lower: iv.lower,
                upper: iv.upper,
            });
        }
    }
    Ok(())
}

fn movement(old: &DualState, new: &DualState, scales: &ConstraintScales) -> f64 {
    let f = scales.objective;
    let fam = |a: &[f64], b: &[f64], s: f64| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() * s / f)
            .fold(0.0f64, f64::max)
    };
    fam(&old.lambda, &new.lambda, scales.energy)
        .max(fam(&old.mu, &new.mu, scales.time))
        .max(fam(&old.nu, &new.nu, scales.interference))
        .max(fam(&old.rho_rt, &new.rho_rt, scales.rate_rt))
        .max(fam(&old.rho_nrt, &new.rho_nrt, scales.rate_nrt))
}

/// Projected dual subgradient solve of the slot-structure problem for a fixed
/// allocation.
///
/// Stops once the normalized multiplier movement is below `tol_dual` while
/// the primal iterate violates no constraint by more than `tol_primal`, or at
/// `max_iterations`. The best feasible iterate seen is returned. A rate
/// requirement that is out of reach even without interference limits ends
/// the solve immediately with a non-converged report.
pub fn dual_subgradient_solve(scenario: &Scenario, allocation: &Allocation, cfg: &DualConfig) -> Result<SolveReport> {
    check_allocation(scenario, allocation)?;
    let fallback = crate::allocation::initial_thetas(scenario)?;
    let unconstrained = unconstrained_thetas(scenario, allocation, &fallback, cfg.execution)?;
    let free = evaluate_constraints(scenario, allocation, &unconstrained);

    let unreachable: Vec<SolveFlag> = allocation
        .allocated_sus()
        .filter(|&i| {
            let req = scenario.su(i).rate_requirement;
            req > 0.0 && free.achieved_rate[i] < req * (1.0 - cfg.tol_primal)
        })
        .map(|su| SolveFlag::RateUnreachable { su })
        .collect();
    if !unreachable.is_empty() {
        let mut report = SolveReport::evaluate(
            scenario,
            allocation,
            unconstrained,
            SolveMethod::DualSubgradient,
            0,
            cfg.tol_primal,
            unreachable,
        );
        report.converged = false;
        return Ok(report);
    }

    let scales = ConstraintScales::new(scenario, allocation, sum_rate(&free, allocation));
    let schedule = StepSchedule::scaled(cfg.step_scale, &scales);
    let mut duals = DualState::zero(scenario.num_sus(), scenario.num_pus(), schedule);
    let mut theta = unconstrained.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let prev = theta;
        let next = cfg.execution.map_range(scenario.num_sus(), |i| {
            if allocation.is_allocated(i) {
                inner_theta(scenario, allocation, &duals, i, prev[i])
            } else {
                Ok(prev[i])
            }
        });
        theta = next.into_iter().collect::<Result<Vec<f64>>>()?;

        let slacks = evaluate_constraints(scenario, allocation, &theta);
        let violation = slacks.max_violation(scenario, allocation);
        let objective = sum_rate(&slacks, allocation);
        if violation <= cfg.tol_primal && best.as_ref().is_none_or(|(b, _)| objective > *b) {
            best = Some((objective, theta.clone()));
        }
        let updated = dual_update(&duals, &theta, scenario, allocation);
        let moved = movement(&duals, &updated, &scales);
        duals = updated;
        if moved < cfg.tol_dual && violation <= cfg.tol_primal {
            converged = true;
            break;
        }
    }
    if !converged {
        log::info!("dual subgradient stopped after {iterations} iterations without meeting the tolerances");
    }

    let final_theta = best.map(|(_, th)| th).unwrap_or(theta);
    let mut flags = Vec::new();
    for i in allocation.allocated_sus() {
        let (lo, hi) = scenario.theta_interval(i).guarded();
        if final_theta[i] <= lo || final_theta[i] >= hi {
            flags.push(SolveFlag::Boundary { su: i });
        }
    }
    let mut report = SolveReport::evaluate(
        scenario,
        allocation,
        final_theta,
        SolveMethod::DualSubgradient,
        iterations,
        cfg.tol_primal,
        flags,
    );
    report.converged = converged && report.converged;
    Ok(report)
}

/// Power `p_i(θ)` of every SU, for diagnostics.
pub fn transmit_powers(scenario: &Scenario, theta: &[f64]) -> Vec<f64> {
    scenario
        .sus()
        .iter()
        .zip(theta)
        .map(|(su, &th)| {
            let b = SlotBudget::new(su, th, scenario.params());
            if b.time > 0.0 {
                b.energy.max(0.0) / b.time
            } else {
                f64::INFINITY
            }
        })
        .collect()
}
