//! Closed-form metrics: MC success probability, average AoI, PAoI violation
//! probability and eMBB rate for puncturing, NOMA and RSMA.
//!
//! All functions are pure. Rates inside `log2` use mean channel gains
//! (plug-in); the simulator reports the ergodic average separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    rho_split_unchecked, snr_threshold, OperatingPoint, RsmaSplit, Scheme, SchemeMetrics, SystemConfig,
};

/// `1 / (p_m s_m)`, or `+inf` when no update can ever be delivered.
pub fn avg_aoi(activation_prob: f64, success: f64) -> f64 {
    let q = activation_prob * success;
    if q <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / q
    }
}

/// `(1 - p_m s_m)^floor(A_th)`; 1 when `A_th < 1`.
pub fn paoi_violation(activation_prob: f64, success: f64, paoi_threshold: f64) -> f64 {
    if paoi_threshold < 1.0 {
        return 1.0;
    }
    let q = (activation_prob * success).clamp(0.0, 1.0);
    (1.0 - q).powf(paoi_threshold.floor())
}

/// Received MC power per unit gain times its mean gain, `P_m d_m^-alpha mu_gm`.
fn mc_mean_rx(op: &OperatingPoint) -> f64 {
    op.mc.mean_rx_power()
}

/// `exp(-rho sigma^2 / (P_m d_m^-alpha mu_gm))`, shared by puncturing and NOMA.
fn noise_survival(op: &OperatingPoint, rho: f64) -> f64 {
    (-rho * op.noise_var / mc_mean_rx(op)).exp()
}

pub fn success_punc(op: &OperatingPoint, cfg: &SystemConfig) -> f64 {
    noise_survival(op, snr_threshold(cfg.spectral_load()))
}

pub fn success_noma(op: &OperatingPoint, cfg: &SystemConfig) -> f64 {
    let rho = snr_threshold(cfg.spectral_load());
    let mc = mc_mean_rx(op);
    let prefactor = mc / (mc + rho * op.embb.mean_rx_power());
    prefactor * noise_survival(op, rho)
}

/// Per-stage probabilities of the RSMA decoding chain `x_m1 -> x_e -> x_m2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsmaStages {
    /// Outage of the first virtual user.
    pub p_out_1: f64,
    /// `1 - p_out_1`.
    pub s_1: f64,
    /// Outage of the second virtual user after perfect SIC.
    pub p_out_2: f64,
}

/// RSMA link quantities that do not depend on the split; lets the optimizer
/// evaluate many splits at the cost of a few multiplications each.
#[derive(Debug, Clone, Copy)]
pub struct RsmaLink {
    /// `P_m d_m^-alpha mu_gm`
    mc: f64,
    /// `P_e d_e^-alpha mu_ge`
    embb: f64,
    noise_var: f64,
    spectral_load: f64,
}

impl RsmaLink {
    pub fn new(op: &OperatingPoint, cfg: &SystemConfig) -> Self {
        RsmaLink {
            mc: op.mc.mean_rx_power(),
            embb: op.embb.mean_rx_power(),
            noise_var: op.noise_var,
            spectral_load: cfg.spectral_load(),
        }
    }

    pub fn rhos(&self, rate_split: f64) -> (f64, f64) {
        rho_split_unchecked(self.spectral_load, rate_split)
    }

    /// Closed-form `s_m^RSMA` for power split `omega` and precomputed thresholds.
    /// Infeasible splits (`omega - rho_1 (1 - omega) <= 0`) give 0.
    pub fn success_with(&self, omega: f64, rho_1: f64, rho_2: f64) -> f64 {
        let headroom = omega - rho_1 * (1.0 - omega);
        if !(headroom > 0.0) {
            return 0.0;
        }
        let useful = self.mc * headroom;
        let prefactor = useful / (useful + rho_1 * self.embb);
        let residual = 1.0 - omega;
        let exponent = ((residual * rho_1 + headroom * rho_2) * self.noise_var) / (self.mc * residual * headroom);
        prefactor * (-exponent).exp()
    }

    pub fn success(&self, omega: f64, rate_split: f64) -> f64 {
        let (rho_1, rho_2) = self.rhos(rate_split);
        self.success_with(omega, rho_1, rho_2)
    }

    pub fn stages(&self, omega: f64, rate_split: f64) -> RsmaStages {
        let (rho_1, rho_2) = self.rhos(rate_split);
        let headroom = omega - rho_1 * (1.0 - omega);
        let s_1 = if headroom > 0.0 {
            let useful = self.mc * headroom;
            let prefactor = useful / (useful + rho_1 * self.embb);
            prefactor * (-rho_1 * self.noise_var / useful).exp()
        } else {
            0.0
        };
        let p_out_2 = -(-rho_2 * self.noise_var / (self.mc * (1.0 - omega))).exp_m1();
        RsmaStages {
            p_out_1: 1.0 - s_1,
            s_1,
            p_out_2,
        }
    }
}

pub fn rsma_stage_probs(op: &OperatingPoint, cfg: &SystemConfig, split: &RsmaSplit) -> RsmaStages {
    RsmaLink::new(op, cfg).stages(split.power_split, split.rate_split)
}

pub fn success_rsma(op: &OperatingPoint, cfg: &SystemConfig, split: &RsmaSplit) -> f64 {
    RsmaLink::new(op, cfg).success(split.power_split, split.rate_split)
}

/// Exact RSMA success probability when both virtual users see the same
/// fading realization, `P{|g_m|^2 > max(a z + b_1, b_2)}`.
///
/// The closed form in [`success_rsma`] multiplies the two stage probabilities,
/// which treats the stages as independently faded; this function quantifies
/// the difference for a physically shared gain.
pub fn success_rsma_shared_fading(op: &OperatingPoint, cfg: &SystemConfig, split: &RsmaSplit) -> f64 {
    let link = RsmaLink::new(op, cfg);
    let (rho_1, rho_2) = link.rhos(split.rate_split);
    let omega = split.power_split;
    let headroom = omega - rho_1 * (1.0 - omega);
    if !(headroom > 0.0) {
        return 0.0;
    }
    // Everything normalized by mu_gm; z is |g_e|^2 / mu_ge ~ Exp(1).
    let a = rho_1 * link.embb / (link.mc * headroom);
    let b_1 = rho_1 * link.noise_var / (link.mc * headroom);
    let b_2 = rho_2 * link.noise_var / (link.mc * (1.0 - omega));
    // Below z0 the second stage binds, above it the first.
    let z0 = if a > 0.0 { ((b_2 - b_1) / a).max(0.0) } else { f64::INFINITY };
    if z0.is_infinite() {
        return (-(b_1.max(b_2))).exp();
    }
    let low = (-b_2).exp() * -(-z0).exp_m1();
    let high = (-b_1 - (1.0 + a) * z0).exp() / (1.0 + a);
    low + high
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

pub fn embb_rate_punc(op: &OperatingPoint, cfg: &SystemConfig) -> f64 {
    cfg.total_bandwidth * (1.0 - cfg.activation_prob) * log2_1p(op.embb_mean_snr())
}

pub fn embb_rate_noma(op: &OperatingPoint, cfg: &SystemConfig) -> f64 {
    let s = success_noma(op, cfg);
    noma_rate_given(op, cfg, s)
}

fn noma_rate_given(op: &OperatingPoint, cfg: &SystemConfig, success: f64) -> f64 {
    let p = cfg.activation_prob;
    let clean = log2_1p(op.embb_mean_snr());
    let jammed = log2_1p(op.embb_mean_snr() / (op.mc_mean_snr() + 1.0));
    cfg.total_bandwidth * ((1.0 - p) * clean + p * (1.0 - success) * jammed + p * success * clean)
}

/// eMBB rate under RSMA with split `split` (normally the optimizer's).
pub fn embb_rate_rsma(op: &OperatingPoint, cfg: &SystemConfig, split: &RsmaSplit) -> f64 {
    let s_1 = rsma_stage_probs(op, cfg, split).s_1;
    rsma_rate_given(op, cfg, split.power_split, s_1)
}

fn rsma_rate_given(op: &OperatingPoint, cfg: &SystemConfig, omega: f64, s_1: f64) -> f64 {
    let p = cfg.activation_prob;
    let snr_e = op.embb_mean_snr();
    let clean = log2_1p(snr_e);
    let jammed = log2_1p(snr_e / (op.mc_mean_snr() + 1.0));
    let residual = log2_1p(snr_e / ((1.0 - omega) * op.mc_mean_snr() + 1.0));
    cfg.total_bandwidth * ((1.0 - p) * clean + p * (1.0 - s_1) * jammed + p * s_1 * residual)
}

/// Evaluates every closed form for one scheme. RSMA needs a split.
pub fn scheme_metrics(
    scheme: Scheme,
    op: &OperatingPoint,
    cfg: &SystemConfig,
    split: Option<&RsmaSplit>,
) -> Result<SchemeMetrics> {
    let p = cfg.activation_prob;
    let (success, embb_rate, rsma_split) = match scheme {
        Scheme::Punc => (success_punc(op, cfg), embb_rate_punc(op, cfg), None),
        Scheme::Noma => {
            let s = success_noma(op, cfg);
            (s, noma_rate_given(op, cfg, s), None)
        }
        Scheme::Rsma => {
            let split = split.ok_or(Error::MissingSplit)?;
            split.validate()?;
            let link = RsmaLink::new(op, cfg);
            let s = link.success(split.power_split, split.rate_split);
            let s_1 = link.stages(split.power_split, split.rate_split).s_1;
            (s, rsma_rate_given(op, cfg, split.power_split, s_1), Some(*split))
        }
    };
    Ok(SchemeMetrics {
        scheme,
        success,
        avg_aoi: avg_aoi(p, success),
        paoi_violation: paoi_violation(p, success, cfg.paoi_threshold),
        embb_rate,
        rsma_split,
    })
}

/// Inputs and closed-form outputs of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBundle {
    pub op: OperatingPoint,
    pub cfg: SystemConfig,
    pub split: Option<RsmaSplit>,
    pub metrics: SchemeMetrics,
}

impl AnalyticBundle {
    pub fn evaluate(
        scheme: Scheme,
        op: &OperatingPoint,
        cfg: &SystemConfig,
        split: Option<&RsmaSplit>,
    ) -> Result<Self> {
        let metrics = scheme_metrics(scheme, op, cfg, split)?;
        Ok(AnalyticBundle {
            op: *op,
            cfg: *cfg,
            split: split.copied(),
            metrics,
        })
    }
}
