//! Minislot-resolution Monte-Carlo simulation of one access scheme.
//!
//! Every minislot draws a Bernoulli MC arrival and i.i.d. exponential channel
//! gains, applies the scheme's decode rule (with SIC where applicable),
//! advances the AoI recursion and accumulates the eMBB rate. Random draws are
//! made in a fixed order regardless of scheme, so runs with the same seed use
//! common random numbers across schemes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytics::RsmaLink;
use crate::error::{Error, Result};
use crate::model::{snr_threshold, OperatingPoint, RsmaSplit, Scheme, SystemConfig};

/// Fading seen by the second RSMA virtual user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageFading {
    /// `x_m2` is decoded against a fresh gain draw. This is the stage
    /// independence under which the closed-form success probability is a
    /// product of the two stage probabilities.
    #[default]
    Independent,
    /// Both virtual users share the minislot's MC gain.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub stage_fading: StageFading,
    /// Assert the AoI recursion every minislot.
    pub check_invariants: bool,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    fn proportion(hits: u64, n: u64) -> Option<Estimate> {
        if n == 0 {
            return None;
        }
        let p = hits as f64 / n as f64;
        Some(Estimate {
            mean: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
        })
    }

    /// `|mean - target| <= k * std_err`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// What happened in one minislot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinislotOutcome {
    pub mc_active: bool,
    /// `|g_m|^2`
    pub mc_gain: f64,
    /// `|g_e|^2`
    pub embb_gain: f64,
    pub mc_decoded: bool,
    /// RSMA only: first virtual user decoded.
    pub stage1_decoded: bool,
    /// RSMA only: second virtual user decoded (implies stage 1).
    pub stage2_decoded: bool,
    /// `log2(1 + SINR_e)`, zero when the eMBB user is punctured.
    pub embb_spectral_eff: f64,
}

/// AoI tracker and accumulators of a running simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Current AoI, minislots.
    pub aoi: u64,
    pub minislot: u64,
    /// Histogram of peak AoI values (inter-delivery times).
    pub peaks: BTreeMap<u64, u64>,
    pub arrivals: u64,
    pub successes: u64,
    /// Sum of per-minislot `log2(1 + SINR_e)`.
    pub embb_eff_sum: f64,
    pub embb_eff_sq_sum: f64,
    /// Sum of AoI over minislots of completed cycles.
    completed_area: u128,
    completed_len: u64,
    /// AoI area of the cycle in progress.
    open_area: u128,
}

impl SimState {
    fn new() -> Self {
        SimState {
            aoi: 1,
            minislot: 0,
            peaks: BTreeMap::new(),
            arrivals: 0,
            successes: 0,
            embb_eff_sum: 0.0,
            embb_eff_sq_sum: 0.0,
            completed_area: 0,
            completed_len: 0,
            open_area: 0,
        }
    }

    fn advance(&mut self, outcome: &MinislotOutcome, check: bool) {
        let before = self.aoi;
        self.open_area += u128::from(self.aoi);
        if outcome.mc_active {
            self.arrivals += 1;
        }
        if outcome.mc_decoded {
            self.successes += 1;
            *self.peaks.entry(self.aoi).or_insert(0) += 1;
            self.completed_area += self.open_area;
            self.completed_len += self.aoi;
            self.open_area = 0;
            self.aoi = 1;
        } else {
            self.aoi += 1;
        }
        if check {
            assert!(self.aoi == 1 || self.aoi == before + 1, "AoI jumped from {before} to {}", self.aoi);
        }
        self.embb_eff_sum += outcome.embb_spectral_eff;
        self.embb_eff_sq_sum += outcome.embb_spectral_eff * outcome.embb_spectral_eff;
        self.minislot += 1;
    }
}

/// Per-minislot decode engine for one scheme at one operating point.
pub struct Simulator {
    scheme: Scheme,
    options: SimOptions,
    activation_prob: f64,
    mc_scale: f64,
    mc_mean_gain: f64,
    embb_scale: f64,
    embb_mean_gain: f64,
    noise_var: f64,
    rho: f64,
    rho_1: f64,
    rho_2: f64,
    omega: f64,
    rng: ChaCha8Rng,
    state: SimState,
}

impl Simulator {
    /// `run_index` selects an independent RNG stream for the same seed.
    pub fn new(
        scheme: Scheme,
        op: &OperatingPoint,
        cfg: &SystemConfig,
        split: Option<&RsmaSplit>,
        run_index: u64,
        options: SimOptions,
    ) -> Result<Self> {
        op.validate()?;
        if !(0.0..=1.0).contains(&cfg.activation_prob) {
            return Err(Error::domain("mc_activation_prob", "must lie in [0, 1]"));
        }
        let (omega, rho_1, rho_2) = match (scheme, split) {
            (Scheme::Rsma, None) => return Err(Error::MissingSplit),
            (Scheme::Rsma, Some(s)) => {
                s.validate()?;
                let (r1, r2) = RsmaLink::new(op, cfg).rhos(s.rate_split);
                (s.power_split, r1, r2)
            }
            _ => (0.0, 0.0, 0.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(run_index);
        Ok(Simulator {
            scheme,
            options,
            activation_prob: cfg.activation_prob,
            mc_scale: op.mc.rx_scale(),
            mc_mean_gain: op.mc.mean_gain,
            embb_scale: op.embb.rx_scale(),
            embb_mean_gain: op.embb.mean_gain,
            noise_var: op.noise_var,
            rho: snr_threshold(cfg.spectral_load()),
            rho_1,
            rho_2,
            omega,
            rng,
            state: SimState::new(),
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Draws and resolves one minislot, then advances the AoI.
    pub fn step(&mut self) -> MinislotOutcome {
        // fixed draw order: arrival, g_m, g_e, second-stage g_m
        let u: f64 = self.rng.random();
        let g_m = self.mc_mean_gain * self.rng.sample::<f64, _>(Exp1);
        let g_e = self.embb_mean_gain * self.rng.sample::<f64, _>(Exp1);
        let g_m2 = self.mc_mean_gain * self.rng.sample::<f64, _>(Exp1);
        let active = u < self.activation_prob;

        let mc_rx = self.mc_scale * g_m;
        let embb_rx = self.embb_scale * g_e;
        let n = self.noise_var;
        let clean = (embb_rx / n).ln_1p();
        let jammed = (embb_rx / (mc_rx + n)).ln_1p();

        let mut out = MinislotOutcome {
            mc_active: active,
            mc_gain: g_m,
            embb_gain: g_e,
            mc_decoded: false,
            stage1_decoded: false,
            stage2_decoded: false,
            embb_spectral_eff: 0.0,
        };
        let nats = if !active {
            clean
        } else {
            match self.scheme {
                Scheme::Punc => {
                    out.mc_decoded = mc_rx / n >= self.rho;
                    0.0
                }
                Scheme::Noma => {
                    out.mc_decoded = mc_rx / (embb_rx + n) >= self.rho;
                    if out.mc_decoded {
                        clean
                    } else {
                        jammed
                    }
                }
                Scheme::Rsma => {
                    let w = self.omega;
                    let sinr_1 = w * mc_rx / ((1.0 - w) * mc_rx + embb_rx + n);
                    out.stage1_decoded = sinr_1 >= self.rho_1;
                    if out.stage1_decoded {
                        // x_e is taken as always decodable, so SIC proceeds to x_m2
                        let stage2_rx = match self.options.stage_fading {
                            StageFading::Independent => self.mc_scale * g_m2,
                            StageFading::Shared => mc_rx,
                        };
                        out.stage2_decoded = (1.0 - w) * stage2_rx / n >= self.rho_2;
                        out.mc_decoded = out.stage2_decoded;
                        (embb_rx / ((1.0 - w) * mc_rx + n)).ln_1p()
                    } else {
                        jammed
                    }
                }
            }
        };
        out.embb_spectral_eff = nats / std::f64::consts::LN_2;
        debug_assert!(!out.stage2_decoded || out.stage1_decoded);
        self.state.advance(&out, self.options.check_invariants);
        out
    }

    pub fn run(mut self, minislots: u64) -> SimReport {
        for _ in 0..minislots {
            self.step();
        }
        self.report()
    }

    fn report(self) -> SimReport {
        let st = self.state;
        let n = st.minislot;
        let bw_factor = 1.0; // spectral efficiency; scaled to bit/s below
        let eff_mean = st.embb_eff_sum / n.max(1) as f64;
        let eff_var = if n > 1 {
            ((st.embb_eff_sq_sum - n as f64 * eff_mean * eff_mean) / (n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        let eff = Estimate {
            mean: eff_mean * bw_factor,
            std_err: (eff_var / n.max(1) as f64).sqrt(),
            samples: n,
        };
        let success = Estimate::proportion(st.successes, st.arrivals);
        let avg_aoi = renewal_aoi(&st.peaks);
        SimReport {
            scheme: self.scheme,
            minislots: n,
            arrivals: st.arrivals,
            successes: st.successes,
            success,
            avg_aoi,
            embb_spectral_eff: eff,
            peaks: st.peaks,
            censored_minislots: n - st.completed_len,
        }
    }
}

/// Time-average AoI over completed renewal cycles with a ratio-estimator
/// standard error. `None` when no update was ever delivered.
fn renewal_aoi(peaks: &BTreeMap<u64, u64>) -> Option<Estimate> {
    let cycles: u64 = peaks.values().sum();
    if cycles < 2 {
        return None;
    }
    let (mut area, mut len) = (0.0, 0.0);
    for (&l, &c) in peaks {
        let l = l as f64;
        area += c as f64 * l * (l + 1.0) / 2.0;
        len += c as f64 * l;
    }
    let ratio = area / len;
    let mut dev = 0.0;
    for (&l, &c) in peaks {
        let l = l as f64;
        let r = l * (l + 1.0) / 2.0 - ratio * l;
        dev += c as f64 * r * r;
    }
    let n = cycles as f64;
    let std_err = (dev * n / (n - 1.0)).sqrt() / len;
    Some(Estimate {
        mean: ratio,
        std_err,
        samples: cycles,
    })
}

/// Summary of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: Scheme,
    pub minislots: u64,
    pub arrivals: u64,
    pub successes: u64,
    /// `None` when the MC user never became active.
    pub success: Option<Estimate>,
    /// `None` (censored) when fewer than two deliveries happened.
    pub avg_aoi: Option<Estimate>,
    /// Mean `log2(1 + SINR_e)` per minislot, zero while punctured.
    pub embb_spectral_eff: Estimate,
    /// Peak AoI histogram.
    pub peaks: BTreeMap<u64, u64>,
    /// Minislots after the last delivery, excluded from the AoI average.
    pub censored_minislots: u64,
}

impl SimReport {
    /// Ergodic eMBB rate in bit/s.
    pub fn embb_rate(&self, cfg: &SystemConfig) -> Estimate {
        let e = self.embb_spectral_eff;
        Estimate {
            mean: e.mean * cfg.total_bandwidth,
            std_err: e.std_err * cfg.total_bandwidth,
            samples: e.samples,
        }
    }

    /// Fraction of peaks above `floor(A_th)`.
    pub fn paoi_violation(&self, paoi_threshold: f64) -> Option<Estimate> {
        let total: u64 = self.peaks.values().sum();
        let limit = paoi_threshold.floor();
        let over: u64 = self
            .peaks
            .iter()
            .filter(|(&k, _)| k as f64 > limit)
            .map(|(_, &c)| c)
            .sum();
        Estimate::proportion(over, total)
    }

    pub fn num_peaks(&self) -> u64 {
        self.peaks.values().sum()
    }
}

/// Runs `cfg.num_slots` slots of `scheme` at `op`.
pub fn simulate(
    scheme: Scheme,
    op: &OperatingPoint,
    cfg: &SystemConfig,
    split: Option<&RsmaSplit>,
    run_index: u64,
    options: SimOptions,
) -> Result<SimReport> {
    if cfg.num_slots == 0 || cfg.num_minislots == 0 {
        return Err(Error::domain("num_slots", "simulation horizon must be at least one minislot"));
    }
    let sim = Simulator::new(scheme, op, cfg, split, run_index, options)?;
    Ok(sim.run(cfg.minislots_per_run()))
}

/// Chi-square goodness of fit of a peak histogram against Geometric(q) on {1, 2, ...}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub significance: f64,
    pub pass: bool,
}

pub const MIN_GOF_SAMPLES: u64 = 10_000;
pub const GOF_SIGNIFICANCE: f64 = 0.01;

/// Bins `1..=K` individually plus a `> K` tail, with `K` the largest value
/// keeping every bin's expected count at least 5.
pub fn paoi_distribution_check(peaks: &BTreeMap<u64, u64>, q: f64) -> Result<GofReport> {
    let n: u64 = peaks.values().sum();
    if n < MIN_GOF_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_GOF_SAMPLES,
            got: n,
        });
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain("q", format!("geometric parameter must lie in (0, 1], got {q}")));
    }
    let total = n as f64;
    let mut expected = Vec::new();
    let mut tail = 1.0; // P(A > k)
    let mut k = 1u64;
    loop {
        let pk = tail * q;
        let next_tail = tail * (1.0 - q);
        if total * pk < 5.0 || total * next_tail < 5.0 {
            break;
        }
        expected.push(total * pk);
        tail = next_tail;
        k += 1;
    }
    let last = k - 1; // bins 1..=last individually, tail holds > last
    let observed_at = |v: u64| peaks.get(&v).copied().unwrap_or(0) as f64;
    let mut statistic = 0.0;
    for (i, e) in expected.iter().enumerate() {
        let o = observed_at(i as u64 + 1);
        statistic += (o - e).powi(2) / e;
    }
    let tail_obs: u64 = peaks.range(last + 1..).map(|(_, &c)| c).sum();
    let tail_exp = total * tail;
    if tail_exp > 0.0 {
        statistic += (tail_obs as f64 - tail_exp).powi(2) / tail_exp;
    } else if tail_obs > 0 {
        statistic = f64::INFINITY;
    }
    let bins = expected.len() as u64 + 1;
    let dof = bins - 1;
    let p_value = if dof == 0 {
        if statistic == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if statistic.is_finite() {
        ChiSquared::new(dof as f64)
            .map(|d| d.sf(statistic))
            .unwrap_or(0.0)
    } else {
        0.0
    };
    Ok(GofReport {
        statistic,
        dof,
        p_value,
        significance: GOF_SIGNIFICANCE,
        pass: p_value >= GOF_SIGNIFICANCE,
    })
}
