//! Reference computations written independently of the library's closed
//! forms: numerical integration, Markov-chain power iteration and direct
//! Monte-Carlo of the decoding chain.

#![allow(dead_code)]

use coexist_core::model::{LinkBudget, OperatingPoint, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

/// Reference calibration used throughout the tests: both users at 1 W,
/// 8.9 km, path-loss exponent 4, unit mean gain, thermal noise over 720 kHz.
pub fn reference_cfg() -> SystemConfig {
    SystemConfig {
        mc_packet_size: 0.032,
        ..SystemConfig::table1()
    }
}

pub fn reference_point(gap_db: f64) -> OperatingPoint {
    let b = LinkBudget::new(1.0, 8900.0, 4.0, 1.0).unwrap();
    OperatingPoint::new(b, b, 2.866e-15).unwrap().with_snr_gap(gap_db)
}

pub fn two_pow_minus_one(x: f64) -> f64 {
    2f64.powf(x) - 1.0
}

/// SNR threshold recomputed from first principles.
pub fn rho_of(cfg: &SystemConfig, fraction: f64) -> f64 {
    let tau = cfg.slot_duration * cfg.symbols_per_minislot as f64 / cfg.symbols_per_slot as f64;
    let v = cfg.mc_packet_size / tau;
    two_pow_minus_one(fraction * v * cfg.num_minislots as f64 / cfg.total_bandwidth)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `P(P_m d_m^-a g_m >= rho (P_e d_e^-a g_e + sigma^2))`, integrating the
/// conditional success probability over the eMBB gain density.
pub fn noma_success_by_quadrature(op: &OperatingPoint, rho: f64) -> f64 {
    let a = op.mc.tx_power * op.mc.distance.powf(-op.mc.path_loss_exp);
    let e = op.embb.tx_power * op.embb.distance.powf(-op.embb.path_loss_exp);
    let (mu_m, mu_e) = (op.mc.mean_gain, op.embb.mean_gain);
    let n = op.noise_var;
    let integrand = move |z: f64| {
        let density = (-z / mu_e).exp() / mu_e;
        let cond = (-rho * (e * z + n) / (a * mu_m)).exp();
        density * cond
    };
    // density tail beyond 60 means is below e^-60
    let upper = 60.0 * mu_e;
    let pieces = 64;
    let width = upper / pieces as f64;
    (0..pieces)
        .map(|i| adaptive_simpson(&integrand, i as f64 * width, (i + 1) as f64 * width, 1e-13))
        .sum()
}

/// Estimate with standard error.
#[derive(Debug, Clone, Copy)]
pub struct Mc {
    pub mean: f64,
    pub se: f64,
}

impl Mc {
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se.max(1e-300)
    }
}

fn proportion(hits: u64, n: u64) -> Mc {
    let p = hits as f64 / n as f64;
    Mc {
        mean: p,
        se: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Direct Monte-Carlo of the three-step RSMA decoding chain: the first
/// virtual user against everything else, the eMBB user (assumed decodable),
/// then the second virtual user on a fresh gain draw against noise only.
pub fn rsma_success_by_monte_carlo(op: &OperatingPoint, omega: f64, rho_1: f64, rho_2: f64, draws: u64, seed: u64) -> Mc {
    let a = op.mc.tx_power * op.mc.distance.powf(-op.mc.path_loss_exp);
    let e = op.embb.tx_power * op.embb.distance.powf(-op.embb.path_loss_exp);
    let n = op.noise_var;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..draws {
        let gm: f64 = op.mc.mean_gain * rng.sample::<f64, _>(Exp1);
        let ge: f64 = op.embb.mean_gain * rng.sample::<f64, _>(Exp1);
        let gm2: f64 = op.mc.mean_gain * rng.sample::<f64, _>(Exp1);
        let first = omega * a * gm / ((1.0 - omega) * a * gm + e * ge + n);
        if first < rho_1 {
            continue;
        }
        let second = (1.0 - omega) * a * gm2 / n;
        if second >= rho_2 {
            hits += 1;
        }
    }
    proportion(hits, draws)
}

/// `P(P_m d_m^-a g_m / sigma^2 >= rho)` by sampling.
pub fn punc_success_by_monte_carlo(op: &OperatingPoint, rho: f64, draws: u64, seed: u64) -> Mc {
    let a = op.mc.tx_power * op.mc.distance.powf(-op.mc.path_loss_exp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..draws)
        .filter(|_| a * op.mc.mean_gain * rng.sample::<f64, _>(Exp1) / op.noise_var >= rho)
        .count() as u64;
    proportion(hits, draws)
}

/// Mean of the stationary distribution of the AoI chain on states
/// `1..=L`: from any state, renew to 1 with probability `q`, otherwise
/// move up one. State `L` always renews (truncation). `L` is chosen so the
/// untruncated tail beyond it carries less than `1e-12` mass, and the chain
/// is iterated from a point mass until it stops moving.
pub fn aoi_by_power_iteration(q: f64) -> f64 {
    assert!(q > 0.0 && q <= 1.0);
    let mut len = 1usize;
    while (1.0 - q).powi(len as i32) >= 1e-12 {
        len += 1;
    }
    let len = len + 1;
    let mut pi = vec![0.0; len];
    pi[0] = 1.0;
    let mut next = vec![0.0; len];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (l, &mass) in pi.iter().enumerate() {
            if l + 1 == len {
                next[0] += mass;
            } else {
                next[0] += q * mass;
                next[l + 1] += (1.0 - q) * mass;
            }
        }
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < 1e-15 {
            break;
        }
    }
    pi.iter().enumerate().map(|(l, &m)| (l + 1) as f64 * m).sum()
}

/// Random operating point with moderate link parameters.
pub fn random_point(rng: &mut ChaCha8Rng) -> OperatingPoint {
    let budget = |rng: &mut ChaCha8Rng| {
        LinkBudget::new(
            10f64.powf(rng.random_range(-3.0..1.0)),
            rng.random_range(10.0..500.0),
            rng.random_range(2.0..4.0),
            rng.random_range(0.2..3.0),
        )
        .unwrap()
    };
    let mc = budget(rng);
    let embb = budget(rng);
    // noise chosen so the MC mean SNR lands between -10 and 30 dB
    let snr_db: f64 = rng.random_range(-10.0..30.0);
    let noise = mc.mean_rx_power() / 10f64.powf(snr_db / 10.0);
    OperatingPoint::new(mc, embb, noise).unwrap()
}

/// Random traffic configuration with a spectral load in `[0.05, 3]`.
pub fn random_cfg(rng: &mut ChaCha8Rng) -> SystemConfig {
    let base = SystemConfig::table1();
    let tau = base.minislot_duration();
    let load: f64 = rng.random_range(0.05..3.0);
    SystemConfig {
        mc_packet_size: load * base.total_bandwidth * tau / base.num_minislots as f64,
        activation_prob: rng.random_range(0.05..1.0),
        ..base
    }
}
