//! Flat `key = value unit` configuration files.
//!
//! Values are stored in SI base units. On read, any SI-prefixed unit of the
//! right dimension is accepted (`1 ms`, `62.5 kHz`, `1 mJ`, `-100 dBm`) and
//! bare numbers are taken as base units. Per-SU and per-PU quantities accept
//! a fixed value, `uniform(lo, hi)` or a list `[a, b, c]` that is cycled.
//! Lines starting with `#` are comments.

use std::fmt;
use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A scalar, a uniform range or a cycled list.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    Fixed(f64),
    Uniform(f64, f64),
    List(Vec<f64>),
}

impl ParamSpec {
    /// Value for entity `index`. Uniform draws consume one sample from
    /// `rng`; the other forms consume none.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, index: usize) -> f64 {
        match self {
            ParamSpec::Fixed(v) => *v,
            ParamSpec::Uniform(lo, hi) => {
                if lo == hi {
                    *lo
                } else {
                    rng.gen_range(*lo..*hi)
                }
            }
            ParamSpec::List(v) => v[index % v.len()],
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            ParamSpec::Fixed(v) => vec![*v],
            ParamSpec::Uniform(a, b) => vec![*a, *b],
            ParamSpec::List(v) => v.clone(),
        }
    }

    fn check(&self, key: &str, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        if let ParamSpec::Uniform(lo, hi) = self {
            if lo > hi {
                return Err(Error::Config(format!("{key}: uniform range {lo} > {hi}")));
            }
        }
        if let ParamSpec::List(v) = self {
            if v.is_empty() {
                return Err(Error::Config(format!("{key}: empty list")));
            }
        }
        match self.values().into_iter().find(|v| !(v.is_finite() && ok(*v))) {
            Some(bad) => Err(Error::Config(format!("{key}: {bad} is not {what}"))),
            None => Ok(()),
        }
    }
}

/// Small-scale fading of the channel amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Rayleigh,
    /// Unit amplitude, i.e. path loss only.
    None,
}

/// Everything needed to generate a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Realizations averaged per experiment sweep point; realization `t`
    /// uses seed `seed + t`.
    pub trials: usize,
    /// `K`.
    pub num_sus: usize,
    /// Real-time SUs come first (ids `0..num_rt_sus`).
    pub num_rt_sus: usize,
    /// `L`; PU `m` owns the `m`-th contiguous block of the licensed band.
    pub num_pus: usize,
    /// `N`.
    pub num_subchannels: usize,
    /// `M`, the size of the available set.
    pub num_available: usize,
    pub slot_duration: f64,
    pub subchannel_bandwidth: f64,
    pub noise_psd: f64,
    pub ber: f64,
    pub symbol_duration: f64,
    pub start_frequency: f64,
    pub sensing_time: ParamSpec,
    pub harvest_rate: ParamSpec,
    pub sensing_energy: ParamSpec,
    /// `R^req` of real-time SUs.
    pub rate_requirement: ParamSpec,
    /// `ζ` of non-real-time SUs.
    pub nrt_rate_requirement: ParamSpec,
    pub pu_interference: ParamSpec,
    pub path_loss_exponent: f64,
    /// SU to access point distance, drawn per SU and sub-channel.
    pub distance: ParamSpec,
    /// SU to PU receiver distance, drawn per SU, sub-channel and PU. The
    /// default range sits further out than the access point so that the
    /// usual thresholds (10⁻¹⁵ to 10⁻¹⁰ W) span binding and slack regimes.
    pub pu_distance: ParamSpec,
    pub fading: Fading,
    pub rayleigh_scale: f64,
    /// `Q^L` per sub-channel.
    pub prior: ParamSpec,
    /// `Q^m` per sub-channel.
    pub miss: ParamSpec,
    pub false_alarm: ParamSpec,
    /// When set, overrides `miss` with `1 − detection`.
    pub detection: Option<ParamSpec>,
    /// `I_m^th` per PU.
    pub interference_threshold: ParamSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            trials: 1,
            num_sus: 4,
            num_rt_sus: 4,
            num_pus: 2,
            num_subchannels: 16,
            num_available: 16,
            slot_duration: 1e-3,
            subchannel_bandwidth: 62.5e3,
            noise_psd: 1.6e-18,
            ber: 1e-3,
            symbol_duration: 16e-6,
            start_frequency: 2.4e9,
            sensing_time: ParamSpec::Fixed(10e-6),
            harvest_rate: ParamSpec::Fixed(5.0),
            sensing_energy: ParamSpec::Fixed(1e-3),
            rate_requirement: ParamSpec::Fixed(2.0),
            nrt_rate_requirement: ParamSpec::Fixed(1.0),
            pu_interference: ParamSpec::Fixed(0.0),
            path_loss_exponent: 3.0,
            distance: ParamSpec::Uniform(50.0, 200.0),
            pu_distance: ParamSpec::Uniform(150.0, 600.0),
            fading: Fading::Rayleigh,
            rayleigh_scale: 1.0,
            prior: ParamSpec::Uniform(0.0, 1.0),
            miss: ParamSpec::Uniform(0.01, 0.05),
            false_alarm: ParamSpec::Uniform(0.05, 0.1),
            detection: None,
            interference_threshold: ParamSpec::Fixed(5e-13),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Time,
    Energy,
    Power,
    Frequency,
    HarvestRate,
    Psd,
    Length,
    BitRate,
    Number,
}

impl Dim {
    fn base_unit(self) -> &'static str {
        match self {
            Dim::Number => "",
            Dim::Time => "s",
            Dim::Energy => "J",
            Dim::Power => "W",
            Dim::Frequency => "Hz",
            Dim::HarvestRate => "J/s",
            Dim::Psd => "W/Hz",
            Dim::Length => "m",
            Dim::BitRate => "bps/Hz",
        }
    }
}

const PREFIXES: [(&str, i32); 9] = [
    ("G", 9),
    ("M", 6),
    ("k", 3),
    ("", 0),
    ("m", -3),
    ("u", -6),
    ("µ", -6),
    ("n", -9),
    ("p", -12),
];

/// Decimal exponent of `unit` relative to `dim`'s base unit, or `None` for
/// dBm (handled separately) and unknown units.
fn unit_exponent(unit: &str, dim: Dim) -> Option<i32> {
    if unit.is_empty() {
        return Some(0);
    }
    let base = dim.base_unit();
    if base.is_empty() {
        return None;
    }
    // bps/Hz only takes kbps/Hz, Mbps/Hz
    PREFIXES
        .iter()
        .find(|(p, _)| unit.strip_prefix(p) == Some(base))
        .map(|&(_, e)| e)
}

/// Parses a decimal number scaled by `10^shift` without going through a
/// multiplication, so `10 us` reads as exactly `1e-5`.
fn parse_scaled(text: &str, shift: i32) -> Option<f64> {
    let t = text.trim();
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    if mant.is_empty() || mant.parse::<f64>().is_err() {
        return None;
    }
    format!("{mant}e{}", exp + shift).parse().ok()
}

/// Splits `"<numbers> <unit>"` and returns the numeric part with the unit.
fn split_unit(raw: &str) -> (&str, &str) {
    let raw = raw.trim();
    let end_of_numbers = match raw.rfind([')', ']']) {
        Some(k) => k + 1,
        None => raw.find(char::is_whitespace).unwrap_or(raw.len()),
    };
    (raw[..end_of_numbers].trim(), raw[end_of_numbers..].trim())
}

fn parse_numbers(body: &str, unit: &str, dim: Dim, key: &str) -> std::result::Result<Vec<f64>, String> {
    let convert = |s: &str| -> std::result::Result<f64, String> {
        if unit == "dBm" {
            if dim != Dim::Power {
                return Err(format!("{key}: dBm only applies to powers"));
            }
            let dbm: f64 = s.trim().parse().map_err(|_| format!("{key}: bad number `{s}`"))?;
            return Ok(10f64.powf((dbm - 30.0) / 10.0));
        }
        let shift = unit_exponent(unit, dim)
            .ok_or_else(|| format!("{key}: unit `{unit}` does not fit (expected {})", dim.base_unit()))?;
        parse_scaled(s, shift).ok_or_else(|| format!("{key}: bad number `{}`", s.trim()))
    };
    body.split(',').map(convert).collect()
}

fn parse_spec(raw: &str, dim: Dim, key: &str) -> std::result::Result<ParamSpec, String> {
    let (body, unit) = split_unit(raw);
    if let Some(inner) = body.strip_prefix("uniform(").and_then(|s| s.strip_suffix(')')) {
        let v = parse_numbers(inner, unit, dim, key)?;
        if v.len() != 2 {
            return Err(format!("{key}: uniform takes two bounds"));
        }
        return Ok(ParamSpec::Uniform(v[0], v[1]));
    }
    if let Some(inner) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        return Ok(ParamSpec::List(parse_numbers(inner, unit, dim, key)?));
    }
    let v = parse_numbers(body, unit, dim, key)?;
    match v.as_slice() {
        [x] => Ok(ParamSpec::Fixed(*x)),
        _ => Err(format!("{key}: expected one value")),
    }
}

fn parse_scalar(raw: &str, dim: Dim, key: &str) -> std::result::Result<f64, String> {
    match parse_spec(raw, dim, key)? {
        ParamSpec::Fixed(v) => Ok(v),
        _ => Err(format!("{key}: expected a single value")),
    }
}

fn parse_count(raw: &str, key: &str) -> std::result::Result<usize, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("{key}: expected a non-negative integer"))
}

fn fmt_spec(spec: &ParamSpec, dim: Dim) -> String {
    let unit = dim.base_unit();
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let body = match spec {
        ParamSpec::Fixed(v) => format!("{v:?}"),
        ParamSpec::Uniform(a, b) => format!("uniform({a:?}, {b:?})"),
        ParamSpec::List(v) => format!("[{}]", join(v)),
    };
    if unit.is_empty() {
        body
    } else {
        format!("{body} {unit}")
    }
}

macro_rules! keys {
    ($($key:ident : $kind:ident $(($dim:ident))?),* $(,)?) => {
        /// Every recognised key, in the order files are written.
        pub const KEYS: &[&str] = &[$(stringify!($key)),*];

        impl ScenarioConfig {
            /// Sets one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
                match key {
                    $(stringify!($key) => { keys!(@set self, $key, value, $kind $(($dim))?); })*
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            }

            /// `(key, value)` pairs in SI base units.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $( keys!(@get self, out, $key, $kind $(($dim))?); )*
                out
            }
        }
    };
    (@set $s:ident, $key:ident, $v:ident, count) => { $s.$key = parse_count($v, stringify!($key))? };
    (@set $s:ident, $key:ident, $v:ident, seed) => {
        $s.$key = $v.trim().parse().map_err(|_| format!("{}: expected a 64-bit integer", stringify!($key)))?
    };
    (@set $s:ident, $key:ident, $v:ident, scalar($dim:ident)) => { $s.$key = parse_scalar($v, Dim::$dim, stringify!($key))? };
    (@set $s:ident, $key:ident, $v:ident, spec($dim:ident)) => { $s.$key = parse_spec($v, Dim::$dim, stringify!($key))? };
    (@set $s:ident, $key:ident, $v:ident, optspec($dim:ident)) => {
        $s.$key = match $v.trim() {
            "none" | "" => None,
            other => Some(parse_spec(other, Dim::$dim, stringify!($key))?),
        }
    };
    (@set $s:ident, $key:ident, $v:ident, fading) => {
        $s.$key = match $v.trim() {
            "rayleigh" => Fading::Rayleigh,
            "none" => Fading::None,
            other => return Err(format!("fading: expected rayleigh or none, got `{other}`")),
        }
    };
    (@get $s:ident, $out:ident, $key:ident, count) => { $out.push((stringify!($key), $s.$key.to_string())) };
    (@get $s:ident, $out:ident, $key:ident, seed) => { $out.push((stringify!($key), $s.$key.to_string())) };
    (@get $s:ident, $out:ident, $key:ident, scalar($dim:ident)) => {
        $out.push((stringify!($key), fmt_spec(&ParamSpec::Fixed($s.$key), Dim::$dim)))
    };
    (@get $s:ident, $out:ident, $key:ident, spec($dim:ident)) => { $out.push((stringify!($key), fmt_spec(&$s.$key, Dim::$dim))) };
    (@get $s:ident, $out:ident, $key:ident, optspec($dim:ident)) => {
        $out.push((stringify!($key), $s.$key.as_ref().map_or_else(|| "none".to_string(), |p| fmt_spec(p, Dim::$dim))))
    };
    (@get $s:ident, $out:ident, $key:ident, fading) => {
        $out.push((stringify!($key), match $s.$key { Fading::Rayleigh => "rayleigh", Fading::None => "none" }.to_string()))
    };
}

keys! {
    seed: seed,
    trials: count,
    num_sus: count,
    num_rt_sus: count,
    num_pus: count,
    num_subchannels: count,
    num_available: count,
    slot_duration: scalar(Time),
    subchannel_bandwidth: scalar(Frequency),
    noise_psd: scalar(Psd),
    ber: scalar(Number),
    symbol_duration: scalar(Time),
    start_frequency: scalar(Frequency),
    sensing_time: spec(Time),
    harvest_rate: spec(HarvestRate),
    sensing_energy: spec(Energy),
    rate_requirement: spec(BitRate),
    nrt_rate_requirement: spec(BitRate),
    pu_interference: spec(Power),
    path_loss_exponent: scalar(Number),
    distance: spec(Length),
    pu_distance: spec(Length),
    fading: fading,
    rayleigh_scale: scalar(Number),
    prior: spec(Number),
    miss: spec(Number),
    false_alarm: spec(Number),
    detection: optspec(Number),
    interference_threshold: spec(Power),
}

impl ScenarioConfig {
    /// Range and consistency checks.
    pub fn validate(&self) -> Result<()> {
        let c = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return c("trials must be at least 1".into());
        }
        if self.num_rt_sus > self.num_sus {
            return c(format!(
                "num_rt_sus = {} exceeds num_sus = {}",
                self.num_rt_sus, self.num_sus
            ));
        }
        if self.num_available > self.num_subchannels {
            return c(format!(
                "num_available = {} exceeds num_subchannels = {}",
                self.num_available, self.num_subchannels
            ));
        }
        if self.num_subchannels == 0 || self.num_pus > self.num_subchannels {
            return c(format!(
                "need 1 <= num_subchannels and num_pus <= num_subchannels, got N = {}, L = {}",
                self.num_subchannels, self.num_pus
            ));
        }
        let pos = |x: f64| x > 0.0;
        let nonneg = |x: f64| x >= 0.0;
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        for (name, v) in [
            ("slot_duration", self.slot_duration),
            ("subchannel_bandwidth", self.subchannel_bandwidth),
            ("noise_psd", self.noise_psd),
            ("symbol_duration", self.symbol_duration),
            ("start_frequency", self.start_frequency),
            ("rayleigh_scale", self.rayleigh_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return c(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.ber > 0.0 && self.ber < 0.2) {
            return c(format!("ber must lie in (0, 0.2), got {}", self.ber));
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 0.0) {
            return c(format!(
                "path_loss_exponent must be >= 0, got {}",
                self.path_loss_exponent
            ));
        }
        let t = self.slot_duration;
        self.sensing_time
            .check("sensing_time", |x| x > 0.0 && x < t, "in (0, slot_duration)")?;
        self.harvest_rate.check("harvest_rate", pos, "> 0")?;
        self.sensing_energy.check("sensing_energy", nonneg, ">= 0")?;
        self.rate_requirement.check("rate_requirement", nonneg, ">= 0")?;
        self.nrt_rate_requirement
            .check("nrt_rate_requirement", nonneg, ">= 0")?;
        self.pu_interference.check("pu_interference", nonneg, ">= 0")?;
        self.distance.check("distance", pos, "> 0")?;
        self.pu_distance.check("pu_distance", pos, "> 0")?;
        self.prior.check("prior", prob, "a probability")?;
        self.miss.check("miss", prob, "a probability")?;
        self.false_alarm.check("false_alarm", prob, "a probability")?;
        if let Some(d) = &self.detection {
            d.check("detection", prob, "a probability")?;
        }
        self.interference_threshold
            .check("interference_threshold", pos, "> 0")?;
        Ok(())
    }

    /// Parses a configuration, starting from the defaults. Keys may appear in
    /// any order; later lines win.
    pub fn parse(text: &str) -> Result<Self> {
        ScenarioConfig::default().merge(text)
    }

    /// Applies the assignments of `text` on top of `self`.
    pub fn merge(self, text: &str) -> Result<Self> {
        let mut cfg = self;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.apply_line(line)
                .map_err(|message| Error::Parse { line: n + 1, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` (or `key=value`) assignment.
    pub fn apply_line(&mut self, line: &str) -> std::result::Result<(), String> {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("expected `key = value`, got `{line}`"))?;
        self.set(key.trim(), value.trim())
    }

    /// Applies `key=value` overrides in order and re-validates.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        for (n, o) in overrides.iter().enumerate() {
            self.apply_line(o.as_ref())
                .map_err(|message| Error::Parse { line: n + 1, message })?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Hex SHA-256 of the canonical text form (first 16 digits).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

impl fmt::Display for ScenarioConfig {
    /// Canonical form: every key, in [`KEYS`] order, in SI base units.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    ScenarioConfig::parse(&std::fs::read_to_string(path)?)
}

pub fn write_config(cfg: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, cfg.to_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_are_normalized() {
        let cfg = ScenarioConfig::parse(
            "slot_duration = 1 ms\nsensing_time = 10 us\nsubchannel_bandwidth = 62.5 kHz\n\
             sensing_energy = 1 mJ\nharvest_rate = [30, 40, 60] mJ/s\n\
             interference_threshold = -100 dBm\ndistance = uniform(0.05, 0.2) km",
        )
        .unwrap();
        assert_eq!(cfg.slot_duration, 1e-3);
        assert_eq!(cfg.sensing_time, ParamSpec::Fixed(1e-5));
        assert_eq!(cfg.subchannel_bandwidth, 62_500.0);
        assert_eq!(cfg.sensing_energy, ParamSpec::Fixed(1e-3));
        assert_eq!(cfg.harvest_rate, ParamSpec::List(vec![0.03, 0.04, 0.06]));
        match cfg.interference_threshold {
            ParamSpec::Fixed(w) => assert!((w - 1e-13).abs() < 1e-27),
            _ => panic!(),
        }
        assert_eq!(cfg.distance, ParamSpec::Uniform(50.0, 200.0));
    }

    #[test]
    fn round_trip_is_identity() {
        let mut cfg = ScenarioConfig::default();
        cfg.harvest_rate = ParamSpec::List(vec![0.1 + 0.2, 1.0 / 3.0]);
        cfg.detection = Some(ParamSpec::Uniform(0.0, 1.0));
        cfg.fading = Fading::None;
        cfg.seed = u64::MAX;
        let back = ScenarioConfig::parse(&cfg.to_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_string(), cfg.to_string());
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("# header\nseed = 3\nslot_duration = 1 kg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = ScenarioConfig::parse("bogus = 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ScenarioConfig::parse("no equals sign").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(matches!(ScenarioConfig::parse("num_rt_sus = 9"), Err(Error::Config(_))));
        assert!(matches!(
            ScenarioConfig::parse("distance = uniform(200, 50) m"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn overrides_and_hash() {
        let base = ScenarioConfig::default();
        let changed = base.clone().with_overrides(&["seed=7", "num_sus = 6"]).unwrap();
        assert_eq!(changed.seed, 7);
        assert_eq!(changed.num_sus, 6);
        assert_ne!(changed.hash(), base.hash());
        assert_eq!(base.hash().len(), 16);
    }
}
