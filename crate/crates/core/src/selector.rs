//! SNR-gap sweeps, switchover thresholds and the adaptive scheme map.
//!
//! A non-orthogonal scheme stays eligible while its average-AoI loss and its
//! PAoI-violation loss relative to puncturing are within tolerance. The
//! switchover threshold of a scheme is the last gap of the feasible prefix of
//! the sweep, and the combined threshold is the smaller of the two.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::scheme_metrics;
use crate::error::{Error, Result};
use crate::model::{OperatingPoint, RsmaSplit, Scheme, SchemeMetrics, SystemConfig};
use crate::optimizer::{build_lookup, optimize, LookupTable, Method, OptimizerSettings, SplitSolution};
use crate::sim::{simulate, Estimate, SimOptions, SimReport};

/// Where the RSMA split at each sweep point comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSource {
    /// Solve afresh at every gap.
    Optimize { settings: OptimizerSettings, method: Method },
    /// Nearest entry of a precomputed table.
    Lookup(LookupTable),
    /// The same split everywhere.
    Fixed(RsmaSplit),
}

impl SplitSource {
    fn resolve(&self, op: &OperatingPoint, cfg: &SystemConfig, gap_db: f64) -> Result<(RsmaSplit, Option<SplitSolution>)> {
        match self {
            SplitSource::Optimize { settings, method } => {
                let sol = optimize(op, cfg, settings, *method)?;
                Ok((sol.split, Some(sol)))
            }
            SplitSource::Lookup(table) => {
                let sol = table.query(gap_db);
                Ok((sol.split, Some(*sol)))
            }
            SplitSource::Fixed(split) => Ok((*split, None)),
        }
    }
}

/// All three schemes evaluated at one SNR gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gap_db: f64,
    pub punc: SchemeMetrics,
    pub noma: SchemeMetrics,
    pub rsma: SchemeMetrics,
    pub split: RsmaSplit,
    /// Optimizer output behind `split`, absent for a fixed split.
    pub solution: Option<SplitSolution>,
}

impl SweepPoint {
    pub fn metrics(&self, scheme: Scheme) -> &SchemeMetrics {
        match scheme {
            Scheme::Punc => &self.punc,
            Scheme::Noma => &self.noma,
            Scheme::Rsma => &self.rsma,
        }
    }
}

/// Evaluates the closed forms of every scheme at one gap.
pub fn evaluate_point(
    template: &OperatingPoint,
    cfg: &SystemConfig,
    gap_db: f64,
    source: &SplitSource,
) -> Result<SweepPoint> {
    let op = template.with_snr_gap(gap_db);
    let (split, solution) = source.resolve(&op, cfg, gap_db)?;
    Ok(SweepPoint {
        gap_db,
        punc: scheme_metrics(Scheme::Punc, &op, cfg, None)?,
        noma: scheme_metrics(Scheme::Noma, &op, cfg, None)?,
        rsma: scheme_metrics(Scheme::Rsma, &op, cfg, Some(&split))?,
        split,
        solution,
    })
}

fn check_grid(gaps: &[f64]) -> Result<()> {
    if gaps.is_empty() {
        return Err(Error::domain("gaps", "sweep needs at least one SNR gap"));
    }
    if gaps.iter().any(|g| !g.is_finite()) || gaps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("gaps", "SNR gaps must be finite and strictly increasing"));
    }
    Ok(())
}

/// Evenly spaced gaps `start, start + step, ...` up to `stop` (inclusive
/// within half a step).
pub fn gap_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::domain("gap grid", format!("need start <= stop and step > 0, got {start}..{stop} by {step}")));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    // integer multiples avoid accumulated rounding; snapping to 1e-9 dB
    // keeps decimal steps printable (20.4, not 20.400000000000006)
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn sweep(template: &OperatingPoint, cfg: &SystemConfig, gaps: &[f64], source: &SplitSource) -> Result<Vec<SweepPoint>> {
    check_grid(gaps)?;
    template.validate()?;
    gaps.par_iter()
        .map(|&g| evaluate_point(template, cfg, g, source))
        .collect()
}

/// Tolerated losses relative to puncturing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Average AoI, minislots.
    pub aoi: f64,
    /// PAoI violation probability.
    pub paoi: f64,
}

impl Tolerances {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Tolerances {
            aoi: cfg.aoi_tolerance,
            paoi: cfg.paoi_tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Aoi,
    Paoi,
}

/// Loss of `scheme` against puncturing at one point. Two infinite AoIs count
/// as no loss.
pub fn constraint_loss(point: &SweepPoint, scheme: Scheme, c: Constraint) -> f64 {
    let (a, b) = match c {
        Constraint::Aoi => (point.metrics(scheme).avg_aoi, point.punc.avg_aoi),
        Constraint::Paoi => (point.metrics(scheme).paoi_violation, point.punc.paoi_violation),
    };
    if a == b {
        0.0
    } else {
        a - b
    }
}

fn satisfied(point: &SweepPoint, scheme: Scheme, c: Constraint, tol: &Tolerances) -> bool {
    let limit = match c {
        Constraint::Aoi => tol.aoi,
        Constraint::Paoi => tol.paoi,
    };
    constraint_loss(point, scheme, c) <= limit
}

/// Thresholds of one scheme, dB. `-inf` means infeasible at the lowest gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeThresholds {
    pub aoi_db: f64,
    pub paoi_db: f64,
    /// `min(aoi_db, paoi_db)`
    pub combined_db: f64,
    /// A constraint became satisfied again after its first violation.
    pub non_monotonic: bool,
}

impl SchemeThresholds {
    fn new(aoi_db: f64, paoi_db: f64, non_monotonic: bool) -> Self {
        SchemeThresholds {
            aoi_db,
            paoi_db,
            combined_db: aoi_db.min(paoi_db),
            non_monotonic,
        }
    }
}

/// Gap interval `(from_db, to_db]` served by one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapInterval {
    pub scheme: Scheme,
    pub from_db: f64,
    pub to_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub tolerances: Tolerances,
    pub noma: SchemeThresholds,
    pub rsma: SchemeThresholds,
    /// First gap where RSMA overtakes NOMA in success probability,
    /// interpolated linearly between grid points.
    pub crossover_db: Option<f64>,
    /// Sign changes of `s_noma - s_rsma` over the sweep.
    pub crossings: usize,
    pub scheme_map: Vec<MapInterval>,
    /// Thresholds were bisected below grid resolution.
    pub refined: bool,
}

impl ThresholdReport {
    pub fn thresholds(&self, scheme: Scheme) -> Option<&SchemeThresholds> {
        match scheme {
            Scheme::Punc => None,
            Scheme::Noma => Some(&self.noma),
            Scheme::Rsma => Some(&self.rsma),
        }
    }

    pub fn select(&self, gap_db: f64) -> Scheme {
        self.scheme_map
            .iter()
            .find(|iv| gap_db > iv.from_db && gap_db <= iv.to_db)
            .map(|iv| iv.scheme)
            .unwrap_or(Scheme::Punc)
    }
}

/// Last gap of the feasible prefix. Returns the threshold and whether the
/// constraint recovers after its first violation.
fn frontier(points: &[SweepPoint], scheme: Scheme, c: Constraint, tol: &Tolerances) -> (f64, bool) {
    let first_bad = points.iter().position(|p| !satisfied(p, scheme, c, tol));
    match first_bad {
        None => (points[points.len() - 1].gap_db, false),
        Some(i) => {
            let threshold = if i == 0 { f64::NEG_INFINITY } else { points[i - 1].gap_db };
            let recovers = points[i..].iter().any(|p| satisfied(p, scheme, c, tol));
            if recovers {
                warn!("{scheme} {c:?} constraint is not monotone in the gap; using the first violation");
            }
            (threshold, recovers)
        }
    }
}

fn scheme_thresholds(points: &[SweepPoint], scheme: Scheme, tol: &Tolerances) -> SchemeThresholds {
    let (aoi, nm_a) = frontier(points, scheme, Constraint::Aoi, tol);
    let (paoi, nm_p) = frontier(points, scheme, Constraint::Paoi, tol);
    SchemeThresholds::new(aoi, paoi, nm_a || nm_p)
}

fn crossover(points: &[SweepPoint]) -> (Option<f64>, usize) {
    let diffs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.gap_db, p.noma.success - p.rsma.success))
        .filter(|&(_, d)| d != 0.0)
        .collect();
    let mut first = None;
    let mut count = 0;
    for w in diffs.windows(2) {
        let ((g0, d0), (g1, d1)) = (w[0], w[1]);
        if (d0 > 0.0) != (d1 > 0.0) {
            count += 1;
            if first.is_none() {
                first = Some(g0 + (g1 - g0) * d0 / (d0 - d1));
            }
        }
    }
    (first, count)
}

/// NOMA up to its threshold, RSMA up to its own, puncturing beyond. Ends are
/// inclusive so every selected grid point satisfies both constraints.
fn scheme_map(noma: &SchemeThresholds, rsma: &SchemeThresholds) -> Vec<MapInterval> {
    let mut map = Vec::new();
    let noma_end = noma.combined_db;
    let rsma_end = rsma.combined_db.max(noma_end);
    if noma_end > f64::NEG_INFINITY {
        map.push(MapInterval {
            scheme: Scheme::Noma,
            from_db: f64::NEG_INFINITY,
            to_db: noma_end,
        });
    }
    if rsma_end > noma_end {
        map.push(MapInterval {
            scheme: Scheme::Rsma,
            from_db: noma_end,
            to_db: rsma_end,
        });
    }
    map.push(MapInterval {
        scheme: Scheme::Punc,
        from_db: rsma_end,
        to_db: f64::INFINITY,
    });
    map
}

pub fn extract_thresholds(points: &[SweepPoint], tol: &Tolerances) -> Result<ThresholdReport> {
    if points.is_empty() {
        return Err(Error::domain("sweep", "cannot extract thresholds from an empty sweep"));
    }
    if tol.aoi.is_nan() || tol.paoi.is_nan() {
        return Err(Error::domain("tolerances", "must not be NaN"));
    }
    let noma = scheme_thresholds(points, Scheme::Noma, tol);
    let rsma = scheme_thresholds(points, Scheme::Rsma, tol);
    let (crossover_db, crossings) = crossover(points);
    Ok(ThresholdReport {
        tolerances: *tol,
        noma,
        rsma,
        crossover_db,
        crossings,
        scheme_map: scheme_map(&noma, &rsma),
        refined: false,
    })
}

/// Bisects every finite, interior threshold between its grid point and the
/// next one until the bracket is narrower than `resolution_db`.
pub fn refine(
    report: &ThresholdReport,
    points: &[SweepPoint],
    template: &OperatingPoint,
    cfg: &SystemConfig,
    source: &SplitSource,
    resolution_db: f64,
) -> Result<ThresholdReport> {
    if !(resolution_db > 0.0) {
        return Err(Error::domain("resolution_db", "must be positive"));
    }
    let tol = report.tolerances;
    let bisect = |scheme: Scheme, c: Constraint, grid_value: f64| -> Result<f64> {
        let Some(i) = points.iter().position(|p| p.gap_db == grid_value) else {
            return Ok(grid_value);
        };
        if i + 1 == points.len() {
            return Ok(grid_value);
        }
        let (mut lo, mut hi) = (grid_value, points[i + 1].gap_db);
        while hi - lo > resolution_db {
            let mid = 0.5 * (lo + hi);
            let p = evaluate_point(template, cfg, mid, source)?;
            if satisfied(&p, scheme, c, &tol) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    };
    let mut refined = report.clone();
    for scheme in [Scheme::Noma, Scheme::Rsma] {
        let t = *report.thresholds(scheme).expect("non-orthogonal scheme");
        let aoi = bisect(scheme, Constraint::Aoi, t.aoi_db)?;
        let paoi = bisect(scheme, Constraint::Paoi, t.paoi_db)?;
        let new = SchemeThresholds::new(aoi, paoi, t.non_monotonic);
        match scheme {
            Scheme::Noma => refined.noma = new,
            _ => refined.rsma = new,
        }
    }
    refined.scheme_map = scheme_map(&refined.noma, &refined.rsma);
    refined.refined = true;
    Ok(refined)
}

/// Combined thresholds at one activation probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRow {
    pub activation_prob: f64,
    pub noma_db: f64,
    pub rsma_db: f64,
    pub report: ThresholdReport,
}

/// Repeats sweep and extraction for every activation probability. The
/// optimal split does not depend on the activation probability, so a fresh
/// solve is done once per gap and shared through a lookup table.
pub fn threshold_vs_activation(
    template: &OperatingPoint,
    cfg: &SystemConfig,
    gaps: &[f64],
    activation_probs: &[f64],
    source: &SplitSource,
    tol: &Tolerances,
) -> Result<Vec<ActivationRow>> {
    check_grid(gaps)?;
    if let Some(p) = activation_probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::domain("activation_probs", format!("{p} is outside (0, 1]")));
    }
    let shared = match source {
        SplitSource::Optimize { settings, method } => {
            SplitSource::Lookup(build_lookup(template, cfg, gaps, settings, *method)?)
        }
        other => other.clone(),
    };
    activation_probs
        .iter()
        .map(|&p| {
            let c = SystemConfig {
                activation_prob: p,
                ..*cfg
            };
            let points = sweep(template, &c, gaps, &shared)?;
            let report = extract_thresholds(&points, tol)?;
            Ok(ActivationRow {
                activation_prob: p,
                noma_db: report.noma.combined_db,
                rsma_db: report.rsma.combined_db,
                report,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePoint {
    pub gap_db: f64,
    pub scheme: Scheme,
    /// eMBB rate of the selected scheme, bit/s.
    pub embb_rate: f64,
    pub punc_rate: f64,
}

pub fn adaptive_rate_curve(points: &[SweepPoint], report: &ThresholdReport) -> Vec<AdaptivePoint> {
    points
        .iter()
        .map(|p| {
            let scheme = report.select(p.gap_db);
            AdaptivePoint {
                gap_db: p.gap_db,
                scheme,
                embb_rate: p.metrics(scheme).embb_rate,
                punc_rate: p.punc.embb_rate,
            }
        })
        .collect()
}

/// Simulated estimates of one scheme next to its closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeValidation {
    pub scheme: Scheme,
    pub success: Option<Estimate>,
    pub avg_aoi: Option<Estimate>,
    pub paoi_violation: Option<Estimate>,
    pub embb_rate: Estimate,
    /// Success, average AoI and PAoI violation all within `k` standard errors.
    pub agrees: bool,
}

fn within(est: Option<Estimate>, target: f64, k: f64) -> bool {
    match est {
        Some(e) if e.std_err > 0.0 => e.agrees_with(target, k),
        Some(e) => (e.mean - target).abs() <= 1e-12,
        None => false,
    }
}

/// Compares one simulation report against the closed-form metrics.
pub fn compare(report: &SimReport, analytic: &SchemeMetrics, cfg: &SystemConfig, k: f64) -> SchemeValidation {
    let paoi = report.paoi_violation(cfg.paoi_threshold);
    let agrees = within(report.success, analytic.success, k)
        && within(report.avg_aoi, analytic.avg_aoi, k)
        && within(paoi, analytic.paoi_violation, k);
    SchemeValidation {
        scheme: report.scheme,
        success: report.success,
        avg_aoi: report.avg_aoi,
        paoi_violation: paoi,
        embb_rate: report.embb_rate(cfg),
        agrees,
    }
}

/// Simulates all three schemes at one sweep point. Schemes share the
/// random stream `run_index`, so they see the same arrivals and fading.
pub fn validate_point(
    point: &SweepPoint,
    template: &OperatingPoint,
    cfg: &SystemConfig,
    run_index: u64,
    options: SimOptions,
    k: f64,
) -> Result<Vec<SchemeValidation>> {
    let op = template.with_snr_gap(point.gap_db);
    Scheme::ALL
        .iter()
        .map(|&scheme| {
            let split = (scheme == Scheme::Rsma).then_some(&point.split);
            let report = simulate(scheme, &op, cfg, split, run_index, options)?;
            Ok(compare(&report, point.metrics(scheme), cfg, k))
        })
        .collect()
}
