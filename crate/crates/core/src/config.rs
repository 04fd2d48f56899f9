//! JSON run configuration and its canonical digest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{thermal_noise, LinkBudget, OperatingPoint, Power, RsmaSplit, SystemConfig};
use crate::optimizer::OptimizerSettings;
use crate::selector::{gap_grid, Tolerances};

/// One user's link parameters as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub tx_power: Power,
    pub distance_m: f64,
    pub path_loss_exp: f64,
    #[serde(default = "one")]
    pub mean_gain: f64,
}

fn one() -> f64 {
    1.0
}

impl BudgetSpec {
    pub fn to_budget(&self) -> Result<LinkBudget> {
        LinkBudget::new(self.tx_power.watts(), self.distance_m, self.path_loss_exp, self.mean_gain)
    }
}

/// Inclusive, evenly spaced SNR-gap grid in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        gap_grid(self.start_db, self.stop_db, self.step_db)
    }
}

fn default_sweep() -> GridSpec {
    GridSpec {
        start_db: -43.0,
        stop_db: 43.0,
        step_db: 0.1,
    }
}

fn default_lookup() -> GridSpec {
    GridSpec {
        start_db: -43.0,
        stop_db: 43.0,
        step_db: 1.0,
    }
}

/// Receiver noise: an explicit power, or thermal noise over the system
/// bandwidth when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub power: Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub mc: BudgetSpec,
    /// eMBB budget at the reference point; sweeps rescale its power.
    pub embb: BudgetSpec,
    #[serde(default = "default_sweep")]
    pub sweep: GridSpec,
    #[serde(default = "default_lookup")]
    pub lookup: GridSpec,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsma_split: Option<RsmaSplit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activation_sweep: Vec<f64>,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(LoadError::Io)?;
        Self::from_json(&text).map_err(LoadError::Parse)
    }

    /// Checks every invariant the document can break.
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.operating_point()?;
        self.optimizer.validate()?;
        self.sweep.points()?;
        self.lookup.points()?;
        if let Some(s) = &self.rsma_split {
            s.validate()?;
        }
        if let Some(p) = self.activation_sweep.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::config("activation_sweep", format!("{p} is outside (0, 1]")));
        }
        Ok(())
    }

    pub fn noise_var(&self) -> f64 {
        match self.noise {
            Some(n) => n.power.watts(),
            None => thermal_noise(self.system.total_bandwidth),
        }
    }

    /// Reference operating point, before any gap rescaling.
    pub fn operating_point(&self) -> Result<OperatingPoint> {
        OperatingPoint::new(self.mc.to_budget()?, self.embb.to_budget()?, self.noise_var())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::from_config(&self.system)
    }

    /// Compact JSON with fields in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read config: {0}")]
    Io(std::io::Error),
    #[error("malformed config: {0}")]
    Parse(serde_json::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {
            "slot_duration_s": 0.001, "num_minislots": 7, "symbols_per_slot": 14,
            "symbols_per_minislot": 2, "subcarrier_spacing_hz": 15000, "subcarriers_per_rb": 12,
            "rb_bandwidth_hz": 180000, "num_rbs": 4, "total_bandwidth_hz": 720000,
            "mc_packet_size_bits": 256, "mc_activation_prob": 0.8, "paoi_threshold_minislots": 4,
            "aoi_tolerance_minislots": 0.1, "paoi_tolerance": 0.01, "num_slots": 1000, "rng_seed": 1
        },
        "mc": {"tx_power": {"unit": "dBm", "value": 30}, "distance_m": 100, "path_loss_exp": 4},
        "embb": {"tx_power": {"unit": "W", "value": 1}, "distance_m": 100, "path_loss_exp": 4}
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.validate().unwrap();
        assert_eq!(doc.sweep.points().unwrap().len(), 861);
        assert_eq!(doc.lookup.points().unwrap().len(), 87);
        assert_eq!(doc.optimizer, OptimizerSettings::default());
        assert!((doc.noise_var() - thermal_noise(720e3)).abs() < 1e-30);
        let op = doc.operating_point().unwrap();
        assert!(op.snr_gap().abs() < 1e-9);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = ConfigDocument::from_json(MINIMAL).unwrap();
        let b = ConfigDocument::from_json(&a.canonical_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let mut c = a.clone();
        c.system.rng_seed = 2;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let bad = MINIMAL.replacen("\"mc\":", "\"typo\": 1, \"mc\":", 1);
        assert!(ConfigDocument::from_json(&bad).is_err());
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.system.activation_prob = 1.5;
        let err = doc.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { field: "mc_activation_prob", .. }), "{err}");
        let mut doc = ConfigDocument::from_json(MINIMAL).unwrap();
        doc.activation_sweep = vec![0.5, 0.0];
        assert!(doc.validate().is_err());
    }
}
