//! Seeded scenario generation.
//!
//! Every random quantity comes from `ChaCha8Rng::seed_from_u64(seed)` with a
//! dedicated stream: stream 0 draws the band (availability, sensing
//! statistics, PU thresholds) and SU `i` draws from stream `2^32 + i`. Adding
//! SUs therefore never changes the draws of existing ones, and the streams
//! are identical on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Fading, ScenarioConfig};
use crate::error::Result;
use crate::model::{snr_gap, PrimaryUser, Scenario, SecondaryUser, SensingModel, SystemParams, TrafficClass};

const SU_STREAM_BASE: u64 = 1 << 32;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rayleigh variate with scale `sigma` by inversion.
fn rayleigh<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    // 1 − U lies in (0, 1], keeping the logarithm finite
    let u: f64 = rng.gen();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// `Y·d^{−β}` for one link.
fn amplitude<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig, d: f64) -> f64 {
    let y = match cfg.fading {
        Fading::Rayleigh => rayleigh(rng, cfg.rayleigh_scale),
        Fading::None => 1.0,
    };
    y * d.powf(-cfg.path_loss_exponent)
}

/// Contiguous band of PU `m` when `n` sub-channels are split among `l` PUs.
pub fn pu_band(m: usize, n: usize, l: usize) -> std::ops::Range<usize> {
    m * n / l..(m + 1) * n / l
}

/// Builds a scenario from `cfg`.
///
/// Gains are amplitudes `h = Y·d^{−β}` per SU and sub-channel (Rayleigh `Y`,
/// unless fading is off); cross gains towards each PU are power gains
/// `g = (Y·d^{−β})²` with their own distance range. The available set is a
/// uniformly random `M`-subset of the band, taken as the first `M` entries of
/// a random permutation so that sweeping `M` gives nested sets.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let n = cfg.num_subchannels;
    let l = cfg.num_pus;
    let params = SystemParams {
        slot_duration: cfg.slot_duration,
        subchannel_bandwidth: cfg.subchannel_bandwidth,
        noise_psd: cfg.noise_psd,
        snr_gap: snr_gap(cfg.ber)?,
        symbol_duration: cfg.symbol_duration,
        start_frequency: cfg.start_frequency,
        num_subchannels: n,
    };

    let mut band = stream_rng(cfg.seed, 0);
    let order = availability_order(cfg.seed, n);
    let mut available: Vec<usize> = order[..cfg.num_available].to_vec();
    available.sort_unstable();
    let mut prior = Vec::with_capacity(n);
    let mut miss = Vec::with_capacity(n);
    let mut false_alarm = Vec::with_capacity(n);
    for j in 0..n {
        prior.push(cfg.prior.sample(&mut band, j));
        let m = match &cfg.detection {
            Some(d) => 1.0 - d.sample(&mut band, j),
            None => cfg.miss.sample(&mut band, j),
        };
        miss.push(m);
        false_alarm.push(cfg.false_alarm.sample(&mut band, j));
    }
    let sensing = SensingModel {
        prior,
        miss,
        false_alarm,
        available,
    };
    let pus = (0..l)
        .map(|m| {
            let (a, u): (Vec<usize>, Vec<usize>) = pu_band(m, n, l).partition(|&j| sensing.is_available(j));
            PrimaryUser {
                id: m,
                interference_threshold: cfg.interference_threshold.sample(&mut band, m),
                available_subchannels: a,
                unavailable_subchannels: u,
            }
        })
        .collect();

    let sus = (0..cfg.num_sus).map(|i| generate_su(cfg, i)).collect();
    Scenario::new(params, sus, pus, sensing)
}

/// The random permutation of the band whose first `M` entries form the
/// available set.
pub fn availability_order(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = stream_rng(seed, 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

fn generate_su(cfg: &ScenarioConfig, i: usize) -> SecondaryUser {
    let mut rng = stream_rng(cfg.seed, SU_STREAM_BASE + i as u64);
    let rt = i < cfg.num_rt_sus;
    let harvest_rate = cfg.harvest_rate.sample(&mut rng, i);
    let sensing_energy = cfg.sensing_energy.sample(&mut rng, i);
    let sensing_time = cfg.sensing_time.sample(&mut rng, i);
    let rate_requirement = if rt {
        cfg.rate_requirement.sample(&mut rng, i)
    } else {
        cfg.nrt_rate_requirement.sample(&mut rng, i)
    };
    let pu_interference = cfg.pu_interference.sample(&mut rng, i);
    let gains = (0..cfg.num_subchannels)
        .map(|j| {
            let d = cfg.distance.sample(&mut rng, j);
            amplitude(&mut rng, cfg, d)
        })
        .collect();
    let cross_gains = (0..cfg.num_subchannels)
        .map(|_| {
            (0..cfg.num_pus)
                .map(|m| {
                    let d = cfg.pu_distance.sample(&mut rng, m);
                    amplitude(&mut rng, cfg, d).powi(2)
                })
                .collect()
        })
        .collect();
    SecondaryUser {
        id: i,
        class: if rt {
            TrafficClass::RealTime
        } else {
            TrafficClass::NonRealTime
        },
        harvest_rate,
        sensing_energy,
        sensing_time,
        rate_requirement,
        gains,
        cross_gains,
        pu_interference,
    }
}
