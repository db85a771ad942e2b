//! Domain types and the physical/statistical formulas of the system model.
//!
//! Sub-channel indices are 0-based throughout the crate. All quantities are
//! SI base units (seconds, joules, watts, hertz); rates are bits/s/Hz.

mod constraints;
mod interference;
pub mod quadrature;
mod rate;
mod sensing;

pub use constraints::{evaluate_constraints, ConstraintSlacks};
pub use interference::{
    interference_factor, interference_factor_with, ofdm_psd, weighted_interference, InterferenceTable,
};
pub use rate::{
    objective_derivative, rate_from_budget, rate_per_subchannel, snr_gap, total_rate, transmit_power, SlotBudget,
};
pub use sensing::{fuse_k_out_of_n, posterior_idle_given_busy, posterior_missed, posterior_occupied};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global constants of the slotted OFDM system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Slot duration `T` (s).
    pub slot_duration: f64,
    /// Sub-channel bandwidth `ω` (Hz).
    pub subchannel_bandwidth: f64,
    /// Noise power spectral density `N0` (W/Hz).
    pub noise_psd: f64,
    /// SNR gap `Γ` of uncoded MQAM at the target BER.
    pub snr_gap: f64,
    /// OFDM symbol duration `t` (s).
    pub symbol_duration: f64,
    /// Start frequency `f_s` of the licensed band (Hz).
    pub start_frequency: f64,
    /// Number of licensed sub-channels `N`.
    pub num_subchannels: usize,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slot_duration", self.slot_duration),
            ("subchannel_bandwidth", self.subchannel_bandwidth),
            ("noise_psd", self.noise_psd),
            ("snr_gap", self.snr_gap),
            ("symbol_duration", self.symbol_duration),
            ("start_frequency", self.start_frequency),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if self.num_subchannels == 0 {
            return Err(Error::Config("num_subchannels must be >= 1".into()));
        }
        Ok(())
    }

    /// Noise power over one sub-channel, `ω·N0` (W).
    pub fn noise_power(&self) -> f64 {
        self.subchannel_bandwidth * self.noise_psd
    }

    /// Nominal frequency range of sub-channel `index`.
    pub fn subchannel_band(&self, index: usize) -> (f64, f64) {
        let lo = self.start_frequency + index as f64 * self.subchannel_bandwidth;
        (lo, lo + self.subchannel_bandwidth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficClass {
    /// Real-time SU with a hard minimum rate.
    RealTime,
    /// Non-real-time SU with a soft rate constraint.
    NonRealTime,
}

impl TrafficClass {
    pub fn is_real_time(self) -> bool {
        self == TrafficClass::RealTime
    }
}

/// Open interval of admissible harvesting ratios, `(ε/(χT), (T−τ)/T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Relative margin kept from both ends of a [`ThetaInterval`] by the solvers.
pub const THETA_GUARD: f64 = 1e-9;

impl ThetaInterval {
    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains_open(&self, theta: f64) -> bool {
        theta > self.lower && theta < self.upper
    }

    /// The closed interval `[lo + δ, hi − δ]` with `δ = THETA_GUARD·(hi − lo)`.
    pub fn guarded(&self) -> (f64, f64) {
        let delta = THETA_GUARD * self.width();
        (self.lower + delta, self.upper - delta)
    }

    pub fn clamp_guarded(&self, theta: f64) -> f64 {
        let (lo, hi) = self.guarded();
        theta.clamp(lo, hi)
    }
}

/// One secondary user's energy, sensing and traffic profile plus channel gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryUser {
    pub id: usize,
    pub class: TrafficClass,
    /// Energy harvesting rate `χ` (J/s).
    pub harvest_rate: f64,
    /// Energy spent on spectrum sensing per slot `ε` (J).
    pub sensing_energy: f64,
    /// Sensing time `τ` (s).
    pub sensing_time: f64,
    /// `R^req` for real-time SUs, `ζ` for non-real-time SUs (bits/s/Hz).
    pub rate_requirement: f64,
    /// Channel gain `h_{i,j}` to the access point, one per sub-channel.
    pub gains: Vec<f64>,
    /// Power gain `g_{i,ℓ,m}` towards each PU receiver, indexed `[ℓ][m]`.
    pub cross_gains: Vec<Vec<f64>>,
    /// Interference `I_i` received from the PUs (W), treated as noise.
    #[serde(default)]
    pub pu_interference: f64,
}

impl SecondaryUser {
    pub fn validate(&self, params: &SystemParams, num_pus: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("SU {}: {msg}", self.id)));
        if !(self.harvest_rate.is_finite() && self.harvest_rate > 0.0) {
            return bad(format!("harvest rate must be > 0, got {}", self.harvest_rate));
        }
        if !(self.sensing_energy.is_finite() && self.sensing_energy >= 0.0) {
            return bad(format!("sensing energy must be >= 0, got {}", self.sensing_energy));
        }
        if !(self.sensing_time > 0.0 && self.sensing_time < params.slot_duration) {
            return bad(format!(
                "sensing time must lie in (0, T = {}), got {}",
                params.slot_duration, self.sensing_time
            ));
        }
        if !(self.rate_requirement.is_finite() && self.rate_requirement >= 0.0) {
            return bad(format!("rate requirement must be >= 0, got {}", self.rate_requirement));
        }
        if !(self.pu_interference.is_finite() && self.pu_interference >= 0.0) {
            return bad(format!("PU interference must be >= 0, got {}", self.pu_interference));
        }
        if self.gains.len() != params.num_subchannels {
            return bad(format!(
                "expected {} gains, got {}",
                params.num_subchannels,
                self.gains.len()
            ));
        }
        if self.gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("gains must be finite and >= 0".into());
        }
        if self.cross_gains.len() != params.num_subchannels || self.cross_gains.iter().any(|row| row.len() != num_pus) {
            return bad(format!(
                "cross gains must be a {} x {} table",
                params.num_subchannels, num_pus
            ));
        }
        if self.cross_gains.iter().flatten().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("cross gains must be finite and >= 0".into());
        }
        Ok(())
    }

    pub fn theta_interval(&self, params: &SystemParams) -> ThetaInterval {
        let t = params.slot_duration;
        ThetaInterval {
            lower: self.sensing_energy / (self.harvest_rate * t),
            upper: (t - self.sensing_time) / t,
        }
    }

    /// `H_{i,j} = |h_{i,j}|² / (Γ(ωN0 + I_i))`.
    pub fn effective_gain(&self, subchannel: usize, params: &SystemParams) -> f64 {
        let h = self.gains[subchannel];
        h * h / (params.snr_gap * (params.noise_power() + self.pu_interference))
    }

    /// `c = χ(T − τ) − ε`, the energy left for transmission if the SU
    /// harvested for the whole non-sensing part of the slot.
    pub fn spare_energy(&self, params: &SystemParams) -> f64 {
        self.harvest_rate * (params.slot_duration - self.sensing_time) - self.sensing_energy
    }
}

/// A licensed user and the sub-channels of its band, split by the fusion
/// center's verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaryUser {
    pub id: usize,
    /// Interference threshold `I_m^th` (W).
    pub interference_threshold: f64,
    /// Band sub-channels declared available, `𝓜_{A,m}`.
    pub available_subchannels: Vec<usize>,
    /// Band sub-channels declared unavailable, `𝓜_{U,m}`.
    pub unavailable_subchannels: Vec<usize>,
}

impl PrimaryUser {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.interference_threshold.is_finite() && self.interference_threshold > 0.0) {
            return Err(Error::Config(format!(
                "PU {}: interference threshold must be > 0, got {}",
                self.id, self.interference_threshold
            )));
        }
        let n = params.num_subchannels;
        let all = self.available_subchannels.iter().chain(&self.unavailable_subchannels);
        if all.clone().any(|&j| j >= n) {
            return Err(Error::Config(format!("PU {}: sub-channel index >= {n}", self.id)));
        }
        if self
            .available_subchannels
            .iter()
            .any(|j| self.unavailable_subchannels.contains(j))
        {
            return Err(Error::Config(format!(
                "PU {}: available and unavailable sets overlap",
                self.id
            )));
        }
        Ok(())
    }

    /// All sub-channels of the band.
    pub fn band(&self) -> impl Iterator<Item = usize> + '_ {
        self.available_subchannels
            .iter()
            .chain(&self.unavailable_subchannels)
            .copied()
    }
}

/// Per-sub-channel sensing statistics and the fusion center's availability
/// decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    /// Prior probability `Q^L` that the sub-channel is used by a PU.
    pub prior: Vec<f64>,
    /// Miss-detection probability `Q^m`.
    pub miss: Vec<f64>,
    /// False-alarm probability `Q^f`.
    pub false_alarm: Vec<f64>,
    /// Sub-channels declared available, sorted ascending.
    pub available: Vec<usize>,
}

impl SensingModel {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        let n = params.num_subchannels;
        for (name, v) in [
            ("prior", &self.prior),
            ("miss", &self.miss),
            ("false_alarm", &self.false_alarm),
        ] {
            if v.len() != n {
                return Err(Error::Config(format!("sensing {name}: expected {n} entries")));
            }
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Config(format!(
                    "sensing {name}: probabilities must be in [0, 1]"
                )));
            }
        }
        if self.available.iter().any(|&j| j >= n) {
            return Err(Error::Config(format!("available sub-channel index >= {n}")));
        }
        if self.available.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("available set must be sorted and unique".into()));
        }
        Ok(())
    }

    /// `P¹_j`, see [`posterior_occupied`].
    pub fn posterior_occupied(&self, j: usize) -> Result<f64> {
        posterior_occupied(self.prior[j], self.miss[j], self.false_alarm[j])
    }

    /// `P²_j`, see [`posterior_missed`].
    pub fn posterior_missed(&self, j: usize) -> Result<f64> {
        posterior_missed(self.prior[j], self.miss[j], self.false_alarm[j])
    }

    pub fn is_available(&self, j: usize) -> bool {
        self.available.binary_search(&j).is_ok()
    }
}

/// Binary assignment `f_{i,j}`, stored as the per-SU sets `D_i` (sorted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Allocation {
    sets: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn empty(num_sus: usize) -> Self {
        Allocation {
            sets: vec![Vec::new(); num_sus],
        }
    }

    pub fn from_sets(mut sets: Vec<Vec<usize>>) -> Self {
        for set in &mut sets {
            set.sort_unstable();
        }
        Allocation { sets }
    }

    pub fn assign(&mut self, su: usize, subchannel: usize) {
        let set = &mut self.sets[su];
        let pos = set.partition_point(|&j| j < subchannel);
        set.insert(pos, subchannel);
    }

    pub fn num_sus(&self) -> usize {
        self.sets.len()
    }

    pub fn subchannels(&self, su: usize) -> &[usize] {
        &self.sets[su]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn is_allocated(&self, su: usize) -> bool {
        !self.sets[su].is_empty()
    }

    /// SUs holding at least one sub-channel (`𝒦^Al`).
    pub fn allocated_sus(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sets.len()).filter(|&i| self.is_allocated(i))
    }

    pub fn assigned_count(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// Owner of `subchannel`, if any.
    pub fn owner(&self, subchannel: usize) -> Option<usize> {
        self.sets.iter().position(|set| set.binary_search(&subchannel).is_ok())
    }

    /// Dense indicator matrix `f[i][j]` over `num_subchannels` columns.
    pub fn indicator(&self, num_subchannels: usize) -> Vec<Vec<u8>> {
        self.sets
            .iter()
            .map(|set| {
                let mut row = vec![0u8; num_subchannels];
                for &j in set {
                    row[j] = 1;
                }
                row
            })
            .collect()
    }

    /// Checks that sets are disjoint and drawn from `available`.
    pub fn validate(&self, available: &[usize]) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, set) in self.sets.iter().enumerate() {
            for &j in set {
                if available.binary_search(&j).is_err() {
                    return Err(Error::Precondition(format!(
                        "SU {i} holds sub-channel {j}, which is not available"
                    )));
                }
                if !seen.insert(j) {
                    return Err(Error::Precondition(format!(
                        "sub-channel {j} assigned to more than one SU"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Harvesting ratios together with the resulting sum rate and slacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSolution {
    pub theta: Vec<f64>,
    pub objective_sum_rate: f64,
    pub constraint_slacks: ConstraintSlacks,
}

impl SlotSolution {
    pub fn evaluate(scenario: &Scenario, allocation: &Allocation, theta: &[f64]) -> Self {
        let slacks = evaluate_constraints(scenario, allocation, theta);
        let objective_sum_rate = allocation.allocated_sus().map(|i| slacks.achieved_rate[i]).sum();
        SlotSolution {
            theta: theta.to_vec(),
            objective_sum_rate,
            constraint_slacks: slacks,
        }
    }
}

/// A complete problem instance. The weighted interference table is derived
/// on construction and is not serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScenarioData", into = "ScenarioData")]
pub struct Scenario {
    params: SystemParams,
    sus: Vec<SecondaryUser>,
    pus: Vec<PrimaryUser>,
    sensing: SensingModel,
    table: InterferenceTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioData {
    pub params: SystemParams,
    pub secondary_users: Vec<SecondaryUser>,
    pub primary_users: Vec<PrimaryUser>,
    pub sensing: SensingModel,
}

impl TryFrom<ScenarioData> for Scenario {
    type Error = Error;

    fn try_from(data: ScenarioData) -> Result<Self> {
        Scenario::new(data.params, data.secondary_users, data.primary_users, data.sensing)
    }
}

impl From<Scenario> for ScenarioData {
    fn from(s: Scenario) -> Self {
        ScenarioData {
            params: s.params,
            secondary_users: s.sus,
            primary_users: s.pus,
            sensing: s.sensing,
        }
    }
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.sus == other.sus && self.pus == other.pus && self.sensing == other.sensing
    }
}

impl Scenario {
    pub fn new(
        params: SystemParams,
        sus: Vec<SecondaryUser>,
        pus: Vec<PrimaryUser>,
        sensing: SensingModel,
    ) -> Result<Self> {
        params.validate()?;
        sensing.validate(&params)?;
        for (i, su) in sus.iter().enumerate() {
            if su.id != i {
                return Err(Error::Config(format!("SU at position {i} has id {}", su.id)));
            }
            su.validate(&params, pus.len())?;
        }
        for (m, pu) in pus.iter().enumerate() {
            if pu.id != m {
                return Err(Error::Config(format!("PU at position {m} has id {}", pu.id)));
            }
            pu.validate(&params)?;
        }
        let table = InterferenceTable::build(&params, &sus, &pus, &sensing)?;
        Ok(Scenario {
            params,
            sus,
            pus,
            sensing,
            table,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn sus(&self) -> &[SecondaryUser] {
        &self.sus
    }

    pub fn su(&self, i: usize) -> &SecondaryUser {
        &self.sus[i]
    }

    pub fn pus(&self) -> &[PrimaryUser] {
        &self.pus
    }

    pub fn sensing(&self) -> &SensingModel {
        &self.sensing
    }

    pub fn available(&self) -> &[usize] {
        &self.sensing.available
    }

    pub fn num_sus(&self) -> usize {
        self.sus.len()
    }

    pub fn num_pus(&self) -> usize {
        self.pus.len()
    }

    pub fn interference_table(&self) -> &InterferenceTable {
        &self.table
    }

    /// `I_{i,ℓ,m}`: weighted interference to PU `m` per unit power of SU `i`
    /// on sub-channel `ℓ`.
    pub fn interference_weight(&self, su: usize, subchannel: usize, pu: usize) -> f64 {
        self.table.weight(su, subchannel, pu)
    }

    /// `Σ_{ℓ∈D} I_{i,ℓ,m}` for every PU `m`.
    pub fn aggregate_weights(&self, su: usize, subchannels: &[usize]) -> Vec<f64> {
        (0..self.pus.len())
            .map(|m| subchannels.iter().map(|&l| self.table.weight(su, l, m)).sum())
            .collect()
    }

    pub fn theta_interval(&self, su: usize) -> ThetaInterval {
        self.sus[su].theta_interval(&self.params)
    }

    /// Effective gains `H_{i,j}` of SU `su` over `subchannels`.
    pub fn effective_gains(&self, su: usize, subchannels: &[usize]) -> Vec<f64> {
        subchannels
            .iter()
            .map(|&j| self.sus[su].effective_gain(j, &self.params))
            .collect()
    }

    /// Returns a copy with different PU thresholds (the table does not depend
    /// on them).
    pub fn with_interference_thresholds(&self, thresholds: &[f64]) -> Result<Self> {
        if thresholds.len() != self.pus.len() {
            return Err(Error::Config(format!(
                "expected {} thresholds, got {}",
                self.pus.len(),
                thresholds.len()
            )));
        }
        let mut out = self.clone();
        for (pu, &th) in out.pus.iter_mut().zip(thresholds) {
            pu.interference_threshold = th;
            pu.validate(&out.params)?;
        }
        Ok(out)
    }

    /// Returns a copy with SU profiles altered by `edit`; gains and the
    /// interference table are kept as long as `edit` leaves gains untouched.
    pub fn map_sus(&self, mut edit: impl FnMut(&mut SecondaryUser)) -> Result<Self> {
        let mut sus = self.sus.clone();
        for su in &mut sus {
            edit(su);
        }
        let gains_unchanged = sus.iter().zip(&self.sus).all(|(a, b)| a.cross_gains == b.cross_gains);
        if gains_unchanged {
            for su in &sus {
                su.validate(&self.params, self.pus.len())?;
            }
            let mut out = self.clone();
            out.sus = sus;
            Ok(out)
        } else {
            Scenario::new(self.params.clone(), sus, self.pus.clone(), self.sensing.clone())
        }
    }

    /// Restricts the available set to `available` (must be a subset).
    pub fn with_available(&self, available: Vec<usize>) -> Result<Self> {
        if available.iter().any(|j| !self.sensing.is_available(*j)) {
            return Err(Error::Config("new available set must be a subset".into()));
        }
        let mut sensing = self.sensing.clone();
        sensing.available = available;
        let mut pus = self.pus.clone();
        for pu in &mut pus {
            let band: Vec<usize> = pu.band().collect();
            let (a, u): (Vec<usize>, Vec<usize>) = band.into_iter().partition(|j| sensing.is_available(*j));
            pu.available_subchannels = a;
            pu.unavailable_subchannels = u;
        }
        Scenario::new(self.params.clone(), self.sus.clone(), pus, sensing)
    }
}
