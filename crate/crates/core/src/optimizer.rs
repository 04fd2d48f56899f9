//! Maximizes the RSMA success probability over the power split `omega` and
//! the rate split `lambda`, either exhaustively on a lattice or with a grey
//! wolf optimizer, and tabulates the optimum over SNR gaps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::RsmaLink;
use crate::error::{Error, Result};
use crate::model::{OperatingPoint, RsmaSplit, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub grid_points_omega: usize,
    pub grid_points_lambda: usize,
    pub gwo_population: usize,
    pub gwo_iterations: usize,
    pub omega_bounds: (f64, f64),
    pub lambda_bounds: (f64, f64),
    pub rng_seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            grid_points_omega: 1000,
            grid_points_lambda: 1000,
            gwo_population: 50,
            gwo_iterations: 200,
            omega_bounds: (0.01, 0.99),
            lambda_bounds: (0.01, 0.99),
            rng_seed: 2024,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_omega < 2 || self.grid_points_lambda < 2 {
            return Err(Error::config("grid_points", "need at least 2 points per axis"));
        }
        if self.gwo_population < 3 {
            return Err(Error::config("gwo_population", "needs at least 3 wolves (alpha, beta, delta)"));
        }
        if self.gwo_iterations < 1 {
            return Err(Error::config("gwo_iterations", "must be >= 1"));
        }
        for (field, (lo, hi)) in [("omega_bounds", self.omega_bounds), ("lambda_bounds", self.lambda_bounds)] {
            if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
                return Err(Error::config(field, format!("must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Gwo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::Gwo => "gwo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Method::Grid),
            "gwo" => Ok(Method::Gwo),
            other => Err(Error::domain("method", format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSolution {
    pub split: RsmaSplit,
    /// `s_m^RSMA` at `split`.
    pub objective: f64,
    pub method: Method,
    /// Objective evaluations spent.
    pub evaluations: u64,
    pub feasible: bool,
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Exhaustive search on the inclusive `N_omega x N_lambda` lattice. Ties go
/// to the smallest `omega`, then the smallest `lambda`.
pub fn grid_search(op: &OperatingPoint, cfg: &SystemConfig, settings: &OptimizerSettings) -> Result<SplitSolution> {
    settings.validate()?;
    let link = RsmaLink::new(op, cfg);
    let omegas = lattice(settings.omega_bounds.0, settings.omega_bounds.1, settings.grid_points_omega);
    let lambdas = lattice(settings.lambda_bounds.0, settings.lambda_bounds.1, settings.grid_points_lambda);
    let rhos: Vec<(f64, f64)> = lambdas.iter().map(|&l| link.rhos(l)).collect();

    let row_best: Vec<(usize, f64)> = omegas
        .par_iter()
        .map(|&w| {
            let mut best = (0, f64::NEG_INFINITY);
            for (j, &(r1, r2)) in rhos.iter().enumerate() {
                let s = link.success_with(w, r1, r2);
                if s > best.1 {
                    best = (j, s);
                }
            }
            best
        })
        .collect();

    let mut best = (0, 0, f64::NEG_INFINITY);
    for (i, &(j, s)) in row_best.iter().enumerate() {
        if s > best.2 {
            best = (i, j, s);
        }
    }
    let split = RsmaSplit::new(omegas[best.0], lambdas[best.1])?;
    Ok(SplitSolution {
        split,
        objective: best.2,
        method: Method::Grid,
        evaluations: (omegas.len() * lambdas.len()) as u64,
        feasible: split.is_feasible(cfg) && best.2 > 0.0,
    })
}

#[derive(Debug, Clone, Copy)]
struct Wolf {
    pos: [f64; 2],
    fitness: f64,
}

/// Canonical grey wolf optimizer on the `(omega, lambda)` box.
///
/// `W` wolves start uniformly in the box; each of the `I` iterations moves
/// every wolf to the mean of three pulls toward the alpha, beta and delta
/// leaders with the exploration coefficient `a` falling linearly from 2 to 0,
/// then clamps to the box and re-evaluates. Returns the best wolf ever seen.
pub fn gwo_optimize(op: &OperatingPoint, cfg: &SystemConfig, settings: &OptimizerSettings) -> Result<SplitSolution> {
    settings.validate()?;
    let link = RsmaLink::new(op, cfg);
    let lo = [settings.omega_bounds.0, settings.lambda_bounds.0];
    let hi = [settings.omega_bounds.1, settings.lambda_bounds.1];
    let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed);
    let mut evaluations = 0u64;
    let mut eval = |pos: &[f64; 2]| {
        evaluations += 1;
        link.success(pos[0], pos[1])
    };

    let mut pack: Vec<Wolf> = (0..settings.gwo_population)
        .map(|_| {
            let pos = [
                lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(),
                lo[1] + (hi[1] - lo[1]) * rng.random::<f64>(),
            ];
            Wolf { pos, fitness: 0.0 }
        })
        .collect();
    for w in pack.iter_mut() {
        w.fitness = eval(&w.pos);
    }
    let mut leaders = [pack[0]; 3];
    rank_leaders(&mut leaders, &pack, true);

    let iterations = settings.gwo_iterations;
    for t in 0..iterations {
        let a = 2.0 * (1.0 - t as f64 / iterations as f64);
        for w in pack.iter_mut() {
            let mut next = [0.0; 2];
            for d in 0..2 {
                let mut acc = 0.0;
                for leader in &leaders {
                    let big_a = 2.0 * a * rng.random::<f64>() - a;
                    let c = 2.0 * rng.random::<f64>();
                    let dist = (c * leader.pos[d] - w.pos[d]).abs();
                    acc += leader.pos[d] - big_a * dist;
                }
                next[d] = (acc / 3.0).clamp(lo[d], hi[d]);
            }
            w.pos = next;
        }
        for w in pack.iter_mut() {
            w.fitness = eval(&w.pos);
        }
        rank_leaders(&mut leaders, &pack, false);
    }

    let best = leaders[0];
    let split = RsmaSplit::new(best.pos[0], best.pos[1])?;
    Ok(SplitSolution {
        split,
        objective: best.fitness,
        method: Method::Gwo,
        evaluations,
        feasible: split.is_feasible(cfg) && best.fitness > 0.0,
    })
}

/// Keeps the three fittest wolves seen so far (ties keep the earlier one).
fn rank_leaders(leaders: &mut [Wolf; 3], pack: &[Wolf], reset: bool) {
    let mut pool: Vec<Wolf> = if reset { Vec::new() } else { leaders.to_vec() };
    pool.extend_from_slice(pack);
    // stable sort: earlier entries win ties
    pool.sort_by(|x, y| y.fitness.total_cmp(&x.fitness));
    leaders.copy_from_slice(&pool[..3]);
}

pub fn optimize(
    op: &OperatingPoint,
    cfg: &SystemConfig,
    settings: &OptimizerSettings,
    method: Method,
) -> Result<SplitSolution> {
    match method {
        Method::Grid => grid_search(op, cfg, settings),
        Method::Gwo => gwo_optimize(op, cfg, settings),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupEntry {
    pub gap_db: f64,
    pub solution: SplitSolution,
}

/// Optimal splits precomputed over a sorted list of SNR gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    pub entries: Vec<LookupEntry>,
    pub seed: u64,
}

impl LookupTable {
    /// Entry whose gap is nearest to `gap_db` (the lower one on exact ties).
    pub fn query(&self, gap_db: f64) -> &SplitSolution {
        let idx = self.entries.partition_point(|e| e.gap_db < gap_db);
        let pick = if idx == 0 {
            0
        } else if idx == self.entries.len() {
            idx - 1
        } else {
            let below = gap_db - self.entries[idx - 1].gap_db;
            let above = self.entries[idx].gap_db - gap_db;
            if above < below {
                idx
            } else {
                idx - 1
            }
        };
        &self.entries[pick].solution
    }

    /// CSV body: `gamma_db,omega_star,lambda_star,s_star,method,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gamma_db", "omega_star", "lambda_star", "s_star", "method", "seed"])?;
        for e in &self.entries {
            let s = &e.solution;
            w.write_record([
                e.gap_db.to_string(),
                s.split.power_split.to_string(),
                s.split.rate_split.to_string(),
                s.objective.to_string(),
                s.method.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Optimizes the split at every gap in `gaps` (sorted, finite) by rescaling
/// the eMBB side of `template`.
pub fn build_lookup(
    template: &OperatingPoint,
    cfg: &SystemConfig,
    gaps: &[f64],
    settings: &OptimizerSettings,
    method: Method,
) -> Result<LookupTable> {
    if gaps.is_empty() {
        return Err(Error::domain("gaps", "lookup needs at least one SNR gap"));
    }
    if gaps.iter().any(|g| !g.is_finite()) || gaps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("gaps", "SNR gaps must be finite and sorted ascending"));
    }
    let entries = gaps
        .par_iter()
        .map(|&gap_db| {
            let op = template.with_snr_gap(gap_db);
            optimize(&op, cfg, settings, method).map(|solution| LookupEntry { gap_db, solution })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LookupTable {
        entries,
        seed: settings.rng_seed,
    })
}
