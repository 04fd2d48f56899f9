use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coexist_core::config::{ConfigDocument, LoadError};
use coexist_core::optimizer::{build_lookup, optimize, LookupEntry, LookupTable, Method};
use coexist_core::report::{self, Provenance};
use coexist_core::selector::{
    adaptive_rate_curve, compare, extract_thresholds, refine, sweep, threshold_vs_activation, validate_point,
    SchemeValidation, SplitSource, ThresholdReport,
};
use coexist_core::sim::{paoi_distribution_check, simulate, SimOptions, MIN_GOF_SAMPLES};
use coexist_core::{scheme_metrics, OperatingPoint, RsmaSplit, Scheme, SchemeMetrics, SystemConfig};
use rayon::prelude::*;

use crate::manifest::RunManifest;
use crate::{Command, Common, LookupMethod, SplitArgs};

/// Agreement band for simulated estimates, in standard errors.
const AGREEMENT_SE: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invariant(String),
    #[error("the rsma scheme needs a split: pass --omega/--lambda, set rsma_split in the config, or use --optimize")]
    MissingSplit,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::MissingSplit => 4,
        }
    }
}

impl From<coexist_core::Error> for CliError {
    fn from(e: coexist_core::Error) -> Self {
        match e {
            coexist_core::Error::MissingSplit => CliError::MissingSplit,
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(_) => CliError::Io(e.to_string()),
            LoadError::Parse(_) => CliError::Parse(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Loaded config plus everything derived from the common flags.
struct Session {
    doc: ConfigDocument,
    cfg: SystemConfig,
    template: OperatingPoint,
    prov: Provenance,
    out: PathBuf,
    manifest: RunManifest,
}

impl Session {
    fn open(common: &Common, subcommand: &'static str) -> Result<Self, CliError> {
        let mut doc = ConfigDocument::load(&common.config)?;
        doc.validate()?;
        let digest = doc.digest();
        if let Some(seed) = common.seed {
            doc.system.rng_seed = seed;
            doc.optimizer.rng_seed = seed;
        }
        let template = doc.operating_point()?;
        std::fs::create_dir_all(&common.out).map_err(|e| io_err(&common.out, e))?;
        let seed = doc.system.rng_seed;
        Ok(Session {
            cfg: doc.system,
            template,
            prov: Provenance {
                config_digest: digest.clone(),
                seed,
            },
            out: common.out.clone(),
            manifest: RunManifest::new(subcommand, digest, seed),
            doc,
        })
    }

    fn write<E: Display>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>, &Provenance) -> Result<(), E>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w, &self.prov).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
        self.manifest.record(&path);
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let out = self.out.clone();
        let path = self.manifest.finish(&out).map_err(|e| io_err(&out, e))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn point(&self, gap_db: Option<f64>) -> Result<OperatingPoint, CliError> {
        match gap_db {
            Some(g) if !g.is_finite() => Err(CliError::Invariant(format!("--gamma-db must be finite, got {g}"))),
            Some(g) => Ok(self.template.with_snr_gap(g)),
            None => Ok(self.template),
        }
    }

    fn split(&self, scheme: Scheme, op: &OperatingPoint, args: &SplitArgs) -> Result<Option<RsmaSplit>, CliError> {
        if scheme != Scheme::Rsma {
            return Ok(None);
        }
        if args.optimize {
            let sol = optimize(op, &self.cfg, &self.doc.optimizer, args.method.into())?;
            println!(
                "optimized split ({}): omega={} lambda={} s={}",
                sol.method, sol.split.power_split, sol.split.rate_split, sol.objective
            );
            return Ok(Some(sol.split));
        }
        if let (Some(w), Some(l)) = (args.omega, args.lambda) {
            return Ok(Some(RsmaSplit::new(w, l)?));
        }
        match self.doc.rsma_split {
            Some(s) => {
                s.validate()?;
                Ok(Some(s))
            }
            None => Err(CliError::MissingSplit),
        }
    }
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Metrics {
            common,
            scheme,
            gamma_db,
            simulate,
            split,
        } => metrics(&common, scheme.into(), gamma_db, simulate, &split),
        Command::Sweep {
            common,
            validate,
            refine,
            method,
        } => sweep_cmd(&common, validate, refine, method.into()),
        Command::Optimize {
            common,
            method,
            gamma_db,
        } => optimize_cmd(&common, method, gamma_db),
        Command::Simulate {
            common,
            scheme,
            gamma_db,
            split,
        } => simulate_cmd(&common, scheme.into(), gamma_db, &split),
    }
}

fn print_metrics(gap_db: f64, m: &SchemeMetrics) {
    println!("scheme {} at gap {gap_db:.3} dB", m.scheme);
    if let Some(s) = m.rsma_split {
        println!("  split          omega={} lambda={}", s.power_split, s.rate_split);
    }
    println!("  success        {:.6}", m.success);
    println!("  avg AoI        {:.6} minislots", m.avg_aoi);
    println!("  PAoI violation {:.6e}", m.paoi_violation);
    println!("  eMBB rate      {:.6e} bit/s", m.embb_rate);
}

fn print_validation(v: &SchemeValidation) {
    let show = |name: &str, e: Option<coexist_core::sim::Estimate>| match e {
        Some(e) => println!("  sim {name:<14} {:.6} +- {:.2e}", e.mean, e.std_err),
        None => println!("  sim {name:<14} no sample"),
    };
    show("success", v.success);
    show("avg AoI", v.avg_aoi);
    show("PAoI violation", v.paoi_violation);
    show("eMBB rate", Some(v.embb_rate));
    println!("  agreement      {}", if v.agrees { "pass" } else { "fail" });
}

fn metrics(
    common: &Common,
    scheme: Scheme,
    gamma_db: Option<f64>,
    with_sim: bool,
    split_args: &SplitArgs,
) -> Result<(), CliError> {
    let mut s = Session::open(common, "metrics")?;
    let op = s.point(gamma_db)?;
    let split = s.split(scheme, &op, split_args)?;
    let m = scheme_metrics(scheme, &op, &s.cfg, split.as_ref())?;
    let gap = op.snr_gap();
    print_metrics(gap, &m);
    let validation = if with_sim {
        let r = simulate(scheme, &op, &s.cfg, split.as_ref(), 0, SimOptions::default())?;
        let v = compare(&r, &m, &s.cfg, AGREEMENT_SE);
        print_validation(&v);
        Some(v)
    } else {
        None
    };
    s.write("metrics.csv", |w, p| report::write_metrics(w, p, gap, &m, validation.as_ref()))?;
    s.finish()
}

fn print_thresholds(r: &ThresholdReport) {
    for (name, t) in [("NOMA", &r.noma), ("RSMA", &r.rsma)] {
        println!(
            "{name}: AoI threshold {} dB, violation threshold {} dB, combined {} dB{}",
            t.aoi_db,
            t.paoi_db,
            t.combined_db,
            if t.non_monotonic { " (non-monotone constraint)" } else { "" }
        );
    }
    match r.crossover_db {
        Some(x) => println!("NOMA/RSMA success crossover at {x:.3} dB ({} crossing(s))", r.crossings),
        None => println!("NOMA/RSMA success curves do not cross on the sweep"),
    }
    for iv in &r.scheme_map {
        println!("  ({}, {}] dB -> {}", iv.from_db, iv.to_db, iv.scheme);
    }
}

fn sweep_cmd(common: &Common, validate: bool, refine_thresholds: bool, method: Method) -> Result<(), CliError> {
    let mut s = Session::open(common, "sweep")?;
    let gaps = s.doc.sweep.points()?;
    let source = SplitSource::Optimize {
        settings: s.doc.optimizer,
        method,
    };
    let points = sweep(&s.template, &s.cfg, &gaps, &source)?;
    let tol = s.doc.tolerances();
    let mut thresholds = extract_thresholds(&points, &tol)?;
    // reuse the per-gap solutions for refinement and the activation study
    let table = SplitSource::Lookup(LookupTable {
        entries: points
            .iter()
            .filter_map(|p| p.solution.map(|solution| LookupEntry { gap_db: p.gap_db, solution }))
            .collect(),
        seed: s.doc.optimizer.rng_seed,
    });
    if refine_thresholds {
        thresholds = refine(&thresholds, &points, &s.template, &s.cfg, &source, 1e-3)?;
    }
    print_thresholds(&thresholds);
    let curve = adaptive_rate_curve(&points, &thresholds);

    let validation = if validate {
        let (template, cfg) = (s.template, s.cfg);
        let v = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| validate_point(p, &template, &cfg, i as u64, SimOptions::default(), AGREEMENT_SE))
            .collect::<coexist_core::Result<Vec<_>>>()?;
        let failed = v.iter().flatten().filter(|sv| !sv.agrees).count();
        println!("validation: {failed} of {} scheme/point checks outside 3 SE", v.len() * 3);
        Some(v)
    } else {
        None
    };

    s.write("sweep.csv", |w, p| report::write_sweep(w, p, &points, validation.as_deref()))?;
    s.write("thresholds.csv", |w, p| report::write_thresholds(w, p, &thresholds))?;
    s.write("adaptive.csv", |w, p| report::write_adaptive(w, p, &curve))?;
    if !s.doc.activation_sweep.is_empty() {
        let rows = threshold_vs_activation(&s.template, &s.cfg, &gaps, &s.doc.activation_sweep, &table, &tol)?;
        for r in &rows {
            println!("p_m={}: NOMA {} dB, RSMA {} dB", r.activation_prob, r.noma_db, r.rsma_db);
        }
        s.write("activation.csv", |w, p| report::write_activation(w, p, &rows))?;
    }
    s.finish()
}

fn optimize_cmd(common: &Common, method: LookupMethod, gamma_db: Option<f64>) -> Result<(), CliError> {
    let mut s = Session::open(common, "optimize")?;
    let gaps = match gamma_db {
        Some(g) => vec![g],
        None => s.doc.lookup.points()?,
    };
    let settings = s.doc.optimizer;
    let build = |m: Method| build_lookup(&s.template, &s.cfg, &gaps, &settings, m);
    let (table, other) = match method {
        LookupMethod::Grid => (build(Method::Grid)?, None),
        LookupMethod::Gwo => (build(Method::Gwo)?, None),
        LookupMethod::Both => (build(Method::Grid)?, Some(build(Method::Gwo)?)),
    };
    println!("{} lookup entries", table.entries.len());
    if let Some(o) = &other {
        let worst = table
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| (a.solution.objective - b.solution.objective).abs())
            .fold(0.0, f64::max);
        println!("max |s_grid - s_gwo| = {worst:.3e}");
    }
    s.write("lookup.csv", |w, p| report::write_lookup(w, p, &table, other.as_ref()))?;
    s.finish()
}

fn simulate_cmd(common: &Common, scheme: Scheme, gamma_db: Option<f64>, split_args: &SplitArgs) -> Result<(), CliError> {
    let mut s = Session::open(common, "simulate")?;
    let op = s.point(gamma_db)?;
    let split = s.split(scheme, &op, split_args)?;
    let m = scheme_metrics(scheme, &op, &s.cfg, split.as_ref())?;
    let r = simulate(scheme, &op, &s.cfg, split.as_ref(), 0, SimOptions::default())?;
    let v = compare(&r, &m, &s.cfg, AGREEMENT_SE);
    let gap = op.snr_gap();
    print_metrics(gap, &m);
    print_validation(&v);
    if r.num_peaks() >= MIN_GOF_SAMPLES {
        let gof = paoi_distribution_check(&r.peaks, s.cfg.activation_prob * m.success)?;
        println!(
            "geometric fit of peak AoI: chi2={:.3} dof={} p={:.4} -> {}",
            gof.statistic,
            gof.dof,
            gof.p_value,
            if gof.pass { "pass" } else { "fail" }
        );
    } else {
        println!("geometric fit skipped: {} peaks (< {MIN_GOF_SAMPLES})", r.num_peaks());
    }
    s.write("simulate.csv", |w, p| report::write_metrics(w, p, gap, &m, Some(&v)))?;
    s.write("peaks.csv", |w, p| report::write_peaks(w, p, &r.peaks))?;
    s.finish()
}
