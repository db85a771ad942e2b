use super::quadrature::{adaptive_simpson, SimpsonConfig};
use super::{PrimaryUser, SecondaryUser, SensingModel, SystemParams};
use crate::error::{Error, Result};

/// PSD of an OFDM sub-carrier, `φ(f) = t·(sin(πft)/(πft))²`.
pub fn ofdm_psd(f: f64, t_sym: f64) -> f64 {
    let x = std::f64::consts::PI * f * t_sym;
    if x.abs() < 1e-8 {
        // sinc² = 1 − x²/3 + …, below double precision here
        return t_sym;
    }
    let s = x.sin() / x;
    t_sym * s * s
}

fn check_index(params: &SystemParams, what: &'static str, index: usize) -> Result<()> {
    if index >= params.num_subchannels {
        return Err(Error::domain(
            what,
            format!("index {index} but only {} sub-channels", params.num_subchannels),
        ));
    }
    Ok(())
}

/// Unit-gain leakage between sub-channels `offset` apart: the PSD integrated
/// over `[(offset − ½)ω, (offset + ½)ω]`.
fn offset_leakage(params: &SystemParams, offset: f64, cfg: &SimpsonConfig) -> Result<f64> {
    let w = params.subchannel_bandwidth;
    let t = params.symbol_duration;
    adaptive_simpson(|f| ofdm_psd(f, t), (offset - 0.5) * w, (offset + 0.5) * w, cfg)
}

/// Interference `I^ℓ_{i,j,m}` caused on victim sub-channel `j` by unit power
/// on sub-channel `tx`, scaled by the cross gain `g_{i,ℓ,m}`.
pub fn interference_factor(params: &SystemParams, cross_gain: f64, tx: usize, victim: usize) -> Result<f64> {
    interference_factor_with(params, cross_gain, tx, victim, &SimpsonConfig::default())
}

/// [`interference_factor`] with explicit quadrature settings.
pub fn interference_factor_with(
    params: &SystemParams,
    cross_gain: f64,
    tx: usize,
    victim: usize,
    cfg: &SimpsonConfig,
) -> Result<f64> {
    check_index(params, "transmit sub-channel", tx)?;
    check_index(params, "victim sub-channel", victim)?;
    if cross_gain == 0.0 {
        return Ok(0.0);
    }
    let offset = victim as f64 - tx as f64;
    Ok(cross_gain * offset_leakage(params, offset, cfg)?)
}

/// `I_{i,ℓ,m}`: interference reaching PU `pu` per unit power of `su` on
/// sub-channel `tx`, weighting each band sub-channel by the probability that
/// the PU is really there (`P¹` on available, `P²` on unavailable ones).
pub fn weighted_interference(
    su: &SecondaryUser,
    tx: usize,
    pu: &PrimaryUser,
    sensing: &SensingModel,
    params: &SystemParams,
) -> Result<f64> {
    if !sensing.is_available(tx) {
        return Err(Error::Precondition(format!(
            "transmit sub-channel {tx} is not in the available set"
        )));
    }
    let g = su.cross_gains[tx][pu.id];
    let mut total = 0.0;
    for &j in &pu.available_subchannels {
        total += sensing.posterior_occupied(j)? * interference_factor(params, g, tx, j)?;
    }
    for &j in &pu.unavailable_subchannels {
        total += sensing.posterior_missed(j)? * interference_factor(params, g, tx, j)?;
    }
    Ok(total)
}

/// Precomputed `I_{i,ℓ,m}` for every SU, sub-channel and PU.
///
/// The leakage integral depends only on `|j − ℓ|`, so it is evaluated once
/// per offset and reused.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTable {
    num_subchannels: usize,
    num_pus: usize,
    weights: Vec<f64>,
}

impl InterferenceTable {
    pub fn build(
        params: &SystemParams,
        sus: &[SecondaryUser],
        pus: &[PrimaryUser],
        sensing: &SensingModel,
    ) -> Result<Self> {
        let n = params.num_subchannels;
        let cfg = SimpsonConfig::default();
        let mut leakage = Vec::with_capacity(n);
        for d in 0..n {
            leakage.push(offset_leakage(params, d as f64, &cfg)?);
        }

        // band_sum[m][ℓ] = Σ_j w_j·Φ(|j − ℓ|)
        let mut band_sum = vec![vec![0.0; n]; pus.len()];
        for (m, pu) in pus.iter().enumerate() {
            let mut victims = Vec::new();
            for &j in &pu.available_subchannels {
                victims.push((j, sensing.posterior_occupied(j)?));
            }
            for &j in &pu.unavailable_subchannels {
                victims.push((j, sensing.posterior_missed(j)?));
            }
            for (l, slot) in band_sum[m].iter_mut().enumerate() {
                *slot = victims.iter().map(|&(j, w)| w * leakage[j.abs_diff(l)]).sum();
            }
        }

        let mut weights = Vec::with_capacity(sus.len() * n * pus.len());
        for su in sus {
            for l in 0..n {
                for m in 0..pus.len() {
                    weights.push(su.cross_gains[l][m] * band_sum[m][l]);
                }
            }
        }
        Ok(InterferenceTable {
            num_subchannels: n,
            num_pus: pus.len(),
            weights,
        })
    }

    pub fn weight(&self, su: usize, subchannel: usize, pu: usize) -> f64 {
        self.weights[(su * self.num_subchannels + subchannel) * self.num_pus + pu]
    }
}
