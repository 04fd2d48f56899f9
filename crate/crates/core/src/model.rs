//! Domain types shared by every other module: the time/frequency grid, link
//! budgets, the RSMA split, per-scheme metrics, and the derived link
//! quantities (minislot duration, MC target rate, SNR thresholds, SNR gap).

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise power spectral density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `2^x - 1`, accurate for tiny `x`.
pub(crate) fn snr_threshold(spectral_load: f64) -> f64 {
    (spectral_load * LN_2).exp_m1()
}

/// Time/frequency grid, traffic and tolerance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Long TTI, seconds.
    #[serde(rename = "slot_duration_s")]
    pub slot_duration: f64,
    /// `S`, minislots per slot.
    pub num_minislots: u32,
    /// `N_sym`, OFDM symbols per slot.
    pub symbols_per_slot: u32,
    /// `n_sym`, OFDM symbols per minislot.
    pub symbols_per_minislot: u32,
    #[serde(rename = "subcarrier_spacing_hz")]
    pub subcarrier_spacing: f64,
    pub subcarriers_per_rb: u32,
    /// `f_RB`, Hz.
    #[serde(rename = "rb_bandwidth_hz")]
    pub rb_bandwidth: f64,
    /// `B`.
    pub num_rbs: u32,
    /// `BW = f_RB * B`, Hz.
    #[serde(rename = "total_bandwidth_hz")]
    pub total_bandwidth: f64,
    /// `xi`, bits.
    #[serde(rename = "mc_packet_size_bits")]
    pub mc_packet_size: f64,
    /// `p_m`.
    #[serde(rename = "mc_activation_prob")]
    pub activation_prob: f64,
    /// `A_th`, minislots. Floored where the violation formula needs an integer.
    #[serde(rename = "paoi_threshold_minislots")]
    pub paoi_threshold: f64,
    /// `beta`, tolerated average-AoI loss versus puncturing, minislots.
    #[serde(rename = "aoi_tolerance_minislots")]
    pub aoi_tolerance: f64,
    /// `beta_hat`, tolerated PAoI-violation-probability loss versus puncturing.
    pub paoi_tolerance: f64,
    /// Simulation horizon in slots.
    pub num_slots: u64,
    pub rng_seed: u64,
}

impl SystemConfig {
    /// Evaluation parameters with the literal 32-byte MC packet.
    pub fn table1() -> Self {
        SystemConfig {
            slot_duration: 1e-3,
            num_minislots: 7,
            symbols_per_slot: 14,
            symbols_per_minislot: 2,
            subcarrier_spacing: 15e3,
            subcarriers_per_rb: 12,
            rb_bandwidth: 180e3,
            num_rbs: 4,
            total_bandwidth: 720e3,
            mc_packet_size: 256.0,
            activation_prob: 0.8,
            paoi_threshold: 4.0,
            aoi_tolerance: 0.1,
            paoi_tolerance: 0.01,
            num_slots: 100_000,
            rng_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("slot_duration_s", self.slot_duration)?;
        positive("subcarrier_spacing_hz", self.subcarrier_spacing)?;
        positive("rb_bandwidth_hz", self.rb_bandwidth)?;
        positive("total_bandwidth_hz", self.total_bandwidth)?;
        if self.num_minislots == 0 {
            return Err(Error::config("num_minislots", "must be >= 1"));
        }
        if self.num_rbs == 0 {
            return Err(Error::config("num_rbs", "must be >= 1"));
        }
        if self.symbols_per_minislot == 0 {
            return Err(Error::config("symbols_per_minislot", "must be >= 1"));
        }
        let used = u64::from(self.num_minislots) * u64::from(self.symbols_per_minislot);
        if used > u64::from(self.symbols_per_slot) {
            return Err(Error::config(
                "symbols_per_minislot",
                format!(
                    "{} minislots of {} symbols exceed the {} symbols of a slot",
                    self.num_minislots, self.symbols_per_minislot, self.symbols_per_slot
                ),
            ));
        }
        let grid = self.rb_bandwidth * f64::from(self.num_rbs);
        if (grid - self.total_bandwidth).abs() > 1e-12 * self.total_bandwidth {
            return Err(Error::config(
                "total_bandwidth_hz",
                format!("must equal rb_bandwidth_hz * num_rbs = {grid}, got {}", self.total_bandwidth),
            ));
        }
        if !(self.mc_packet_size.is_finite() && self.mc_packet_size >= 0.0) {
            return Err(Error::config("mc_packet_size_bits", "must be finite and >= 0"));
        }
        if !(self.activation_prob > 0.0 && self.activation_prob <= 1.0) {
            return Err(Error::config(
                "mc_activation_prob",
                format!("must lie in (0, 1], got {}", self.activation_prob),
            ));
        }
        if !(self.paoi_threshold.is_finite() && self.paoi_threshold >= 1.0) {
            return Err(Error::config("paoi_threshold_minislots", "must be finite and >= 1"));
        }
        if self.aoi_tolerance.is_nan() || self.aoi_tolerance < 0.0 {
            return Err(Error::config("aoi_tolerance_minislots", "must be >= 0"));
        }
        if self.paoi_tolerance.is_nan() || self.paoi_tolerance < 0.0 {
            return Err(Error::config("paoi_tolerance", "must be >= 0"));
        }
        Ok(())
    }

    /// `tau_ms`, seconds.
    pub fn minislot_duration(&self) -> f64 {
        self.slot_duration * f64::from(self.symbols_per_minislot) / f64::from(self.symbols_per_slot)
    }

    /// `v_m`, bit/s.
    pub fn mc_rate(&self) -> f64 {
        self.mc_packet_size / self.minislot_duration()
    }

    /// `v_m * S / BW`: spectral efficiency one minislot must carry.
    pub fn spectral_load(&self) -> f64 {
        self.mc_rate() * f64::from(self.num_minislots) / self.total_bandwidth
    }

    pub fn minislots_per_run(&self) -> u64 {
        self.num_slots * u64::from(self.num_minislots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// `tau_ms`, seconds.
    pub minislot_duration: f64,
    /// `v_m`, bit/s.
    pub mc_rate: f64,
    /// `rho = 2^(v_m S / BW) - 1`.
    pub rho: f64,
}

pub fn derive_rates(cfg: &SystemConfig) -> Result<DerivedRates> {
    cfg.validate()?;
    Ok(DerivedRates {
        minislot_duration: cfg.minislot_duration(),
        mc_rate: cfg.mc_rate(),
        rho: snr_threshold(cfg.spectral_load()),
    })
}

/// SNR thresholds of the two virtual MC users for rate split `lambda`.
pub fn rho_split(cfg: &SystemConfig, rate_split: f64) -> Result<(f64, f64)> {
    if !(rate_split > 0.0 && rate_split < 1.0) {
        return Err(Error::domain("rate_split", format!("must lie in (0, 1), got {rate_split}")));
    }
    Ok(rho_split_unchecked(cfg.spectral_load(), rate_split))
}

pub(crate) fn rho_split_unchecked(spectral_load: f64, rate_split: f64) -> (f64, f64) {
    (
        snr_threshold(rate_split * spectral_load),
        snr_threshold((1.0 - rate_split) * spectral_load),
    )
}

/// Transmit power with an explicit unit, as accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "value")]
pub enum Power {
    #[serde(rename = "W")]
    Watts(f64),
    #[serde(rename = "mW")]
    Milliwatts(f64),
    #[serde(rename = "dBm")]
    Dbm(f64),
}

impl Power {
    pub fn watts(self) -> f64 {
        match self {
            Power::Watts(w) => w,
            Power::Milliwatts(mw) => mw * 1e-3,
            Power::Dbm(dbm) => dbm_to_watts(dbm),
        }
    }
}

/// One user's large-scale link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// `P`, watts.
    pub tx_power: f64,
    /// `d`, meters.
    pub distance: f64,
    /// `alpha`.
    pub path_loss_exp: f64,
    /// `mu_g`, mean of the exponential `|g|^2`.
    pub mean_gain: f64,
}

impl LinkBudget {
    pub fn new(tx_power: f64, distance: f64, path_loss_exp: f64, mean_gain: f64) -> Result<Self> {
        let b = LinkBudget {
            tx_power,
            distance,
            path_loss_exp,
            mean_gain,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(Error::config("tx_power", "must be finite and > 0"));
        }
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(Error::config("distance_m", "must be finite and > 0"));
        }
        if !(self.path_loss_exp.is_finite() && self.path_loss_exp >= 0.0) {
            return Err(Error::config("path_loss_exp", "must be finite and >= 0"));
        }
        if !(self.mean_gain.is_finite() && self.mean_gain > 0.0) {
            return Err(Error::config("mean_gain", "must be finite and > 0"));
        }
        Ok(())
    }

    /// `P d^-alpha`: received power per unit channel gain.
    pub fn rx_scale(&self) -> f64 {
        self.tx_power * self.distance.powf(-self.path_loss_exp)
    }

    /// `P d^-alpha mu_g`.
    pub fn mean_rx_power(&self) -> f64 {
        self.rx_scale() * self.mean_gain
    }
}

/// Both users' budgets plus the shared receiver noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub mc: LinkBudget,
    pub embb: LinkBudget,
    /// `sigma^2`, watts.
    pub noise_var: f64,
}

impl OperatingPoint {
    pub fn new(mc: LinkBudget, embb: LinkBudget, noise_var: f64) -> Result<Self> {
        let op = OperatingPoint { mc, embb, noise_var };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        self.mc.validate()?;
        self.embb.validate()?;
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::config("noise", "noise variance must be finite and > 0"));
        }
        Ok(())
    }

    pub fn mc_mean_snr(&self) -> f64 {
        self.mc.mean_rx_power() / self.noise_var
    }

    pub fn embb_mean_snr(&self) -> f64 {
        self.embb.mean_rx_power() / self.noise_var
    }

    /// `Gamma_d` in dB: mean received eMBB power over mean received MC power.
    pub fn snr_gap(&self) -> f64 {
        linear_to_db(self.embb.mean_rx_power() / self.mc.mean_rx_power())
    }

    /// Copy of this point with the eMBB transmit power rescaled so that
    /// [`snr_gap`](Self::snr_gap) returns `gap_db`. The MC side is untouched.
    pub fn with_snr_gap(&self, gap_db: f64) -> OperatingPoint {
        let target = self.mc.mean_rx_power() * db_to_linear(gap_db);
        let mut out = *self;
        out.embb.tx_power = target / (self.embb.rx_scale() / self.embb.tx_power * self.embb.mean_gain);
        out
    }
}

/// Thermal noise over `bandwidth_hz`, watts.
pub fn thermal_noise(bandwidth_hz: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ) * bandwidth_hz
}

/// Access scheme of the MC user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Punc,
    Noma,
    Rsma,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Punc, Scheme::Noma, Scheme::Rsma];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Punc => "punc",
            Scheme::Noma => "noma",
            Scheme::Rsma => "rsma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "punc" | "puncturing" => Ok(Scheme::Punc),
            "noma" => Ok(Scheme::Noma),
            "rsma" => Ok(Scheme::Rsma),
            other => Err(Error::domain("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Power split `omega` and rate split `lambda` of the two virtual MC users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsmaSplit {
    /// `omega`, fraction of MC power on the first virtual user.
    #[serde(rename = "omega")]
    pub power_split: f64,
    /// `lambda`, fraction of the MC rate on the first virtual user.
    #[serde(rename = "lambda")]
    pub rate_split: f64,
}

impl RsmaSplit {
    pub fn new(power_split: f64, rate_split: f64) -> Result<Self> {
        let s = RsmaSplit {
            power_split,
            rate_split,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_split > 0.0 && self.power_split < 1.0) {
            return Err(Error::domain(
                "power_split",
                format!("must lie in (0, 1), got {}", self.power_split),
            ));
        }
        if !(self.rate_split > 0.0 && self.rate_split < 1.0) {
            return Err(Error::domain(
                "rate_split",
                format!("must lie in (0, 1), got {}", self.rate_split),
            ));
        }
        Ok(())
    }

    /// `omega - rho_1 (1 - omega)`: the SINR headroom of the first virtual user.
    pub fn headroom(&self, rho_1: f64) -> f64 {
        self.power_split - rho_1 * (1.0 - self.power_split)
    }

    /// True iff the first virtual user can reach its SINR threshold at all,
    /// i.e. `omega > rho_1 / (1 + rho_1)`.
    pub fn is_feasible(&self, cfg: &SystemConfig) -> bool {
        let (rho_1, _) = rho_split_unchecked(cfg.spectral_load(), self.rate_split);
        self.headroom(rho_1) > 0.0
    }
}

/// `(s_m, avg AoI, PAoI violation, eMBB rate)` of one scheme at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeMetrics {
    pub scheme: Scheme,
    /// Probability that an MC transmission is decoded.
    pub success: f64,
    /// Average AoI, minislots. Infinite when no update can ever succeed.
    pub avg_aoi: f64,
    pub paoi_violation: f64,
    /// eMBB rate, bit/s.
    pub embb_rate: f64,
    pub rsma_split: Option<RsmaSplit>,
}
