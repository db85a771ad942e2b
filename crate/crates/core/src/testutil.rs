//! Small hand-built instances shared by the unit tests.

use crate::model::{PrimaryUser, Scenario, SecondaryUser, SensingModel, SystemParams, TrafficClass};

pub fn params(n: usize) -> SystemParams {
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

/// RT SU with χ = 5 J/s, ε = 1 mJ, τ = 10 µs and a flat cross gain.
pub fn su(id: usize, gains: Vec<f64>, req: f64, num_pus: usize, cross: f64) -> SecondaryUser {
    let n = gains.len();
    SecondaryUser {
        id,
        class: TrafficClass::RealTime,
        harvest_rate: 5.0,
        sensing_energy: 1e-3,
        sensing_time: 10e-6,
        rate_requirement: req,
        gains,
        cross_gains: vec![vec![cross; num_pus]; n],
        pu_interference: 0.0,
    }
}

/// Every sub-channel available; PU `m` owns the `m`-th contiguous block.
pub fn scenario(sus: Vec<SecondaryUser>, thresholds: &[f64]) -> Scenario {
    let n = sus[0].gains.len();
    let l = thresholds.len();
    let pus = thresholds
        .iter()
        .enumerate()
        .map(|(m, &th)| PrimaryUser {
            id: m,
            interference_threshold: th,
            available_subchannels: (m * n / l..(m + 1) * n / l).collect(),
            unavailable_subchannels: vec![],
        })
        .collect();
    let sensing = SensingModel {
        prior: vec![0.5; n],
        miss: vec![0.03; n],
        false_alarm: vec![0.07; n],
        available: (0..n).collect(),
    };
    Scenario::new(params(n), sus, pus, sensing).unwrap()
}
