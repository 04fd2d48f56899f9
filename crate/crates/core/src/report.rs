//! CSV artifacts. Every file opens with two comment rows, one recording the
//! config digest and seed and one documenting column units, followed by the
//! header row.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::model::SchemeMetrics;
use crate::optimizer::LookupTable;
use crate::selector::{ActivationRow, AdaptivePoint, SchemeValidation, SweepPoint, ThresholdReport};

/// Provenance written at the top of every CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
}

struct Table<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> Table<W> {
    fn start(mut out: W, prov: &Provenance, units: &str, header: &[&str]) -> csv::Result<Self> {
        writeln!(out, "# config_digest={} seed={}", prov.config_digest, prov.seed)?;
        writeln!(out, "# units: {units}")?;
        let mut inner = csv::WriterBuilder::new().from_writer(out);
        inner.write_record(header)?;
        Ok(Table { inner })
    }

    fn row<I, S>(&mut self, fields: I) -> csv::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)
    }

    fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

const METRIC_UNITS: &str = "s=probability, aoi=minislots, pv=probability, rate=bit/s";

pub fn write_metrics<W: Write>(
    out: W,
    prov: &Provenance,
    gap_db: f64,
    metrics: &SchemeMetrics,
    sim: Option<&SchemeValidation>,
) -> csv::Result<()> {
    let mut header = vec!["gamma_db", "scheme", "s", "aoi", "pv", "rate", "omega", "lambda"];
    if sim.is_some() {
        header.extend([
            "sim_s", "sim_s_se", "sim_aoi", "sim_aoi_se", "sim_pv", "sim_pv_se", "sim_rate", "sim_rate_se", "agrees",
        ]);
    }
    let units = format!("gamma_db=dB, {METRIC_UNITS}, *_se=standard error");
    let mut t = Table::start(out, prov, &units, &header)?;
    let mut row = vec![
        num(gap_db),
        metrics.scheme.to_string(),
        num(metrics.success),
        num(metrics.avg_aoi),
        num(metrics.paoi_violation),
        num(metrics.embb_rate),
        opt(metrics.rsma_split.map(|s| s.power_split)),
        opt(metrics.rsma_split.map(|s| s.rate_split)),
    ];
    if let Some(v) = sim {
        row.extend(validation_fields(v));
    }
    t.row(row)?;
    t.finish()
}

fn validation_fields(v: &SchemeValidation) -> Vec<String> {
    let pair = |e: Option<crate::sim::Estimate>| [opt(e.map(|e| e.mean)), opt(e.map(|e| e.std_err))];
    let mut f = Vec::with_capacity(9);
    f.extend(pair(v.success));
    f.extend(pair(v.avg_aoi));
    f.extend(pair(v.paoi_violation));
    f.extend(pair(Some(v.embb_rate)));
    f.push(if v.agrees { "pass" } else { "fail" }.to_string());
    f
}

/// One row per gap. With `validation`, each scheme gets simulated columns and
/// a pass/fail agreement flag.
pub fn write_sweep<W: Write>(
    out: W,
    prov: &Provenance,
    points: &[SweepPoint],
    validation: Option<&[Vec<SchemeValidation>]>,
) -> csv::Result<()> {
    let mut header: Vec<String> = vec!["gamma_db".into()];
    for s in ["punc", "noma", "rsma"] {
        for m in ["s", "aoi", "pv", "rate"] {
            header.push(format!("{s}_{m}"));
        }
    }
    header.extend(["omega_star".into(), "lambda_star".into()]);
    if validation.is_some() {
        for s in ["punc", "noma", "rsma"] {
            for m in ["s", "s_se", "aoi", "aoi_se", "pv", "pv_se", "rate", "rate_se", "agrees"] {
                header.push(format!("sim_{s}_{m}"));
            }
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let units = format!("gamma_db=dB, {METRIC_UNITS}, sim_*_se=standard error, agrees=within 3 standard errors");
    let mut t = Table::start(out, prov, &units, &header)?;
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![num(p.gap_db)];
        for m in [&p.punc, &p.noma, &p.rsma] {
            row.extend([num(m.success), num(m.avg_aoi), num(m.paoi_violation), num(m.embb_rate)]);
        }
        row.extend([num(p.split.power_split), num(p.split.rate_split)]);
        if let Some(v) = validation {
            for sv in &v[i] {
                row.extend(validation_fields(sv));
            }
        }
        t.row(row)?;
    }
    t.finish()
}

pub fn write_thresholds<W: Write>(out: W, prov: &Provenance, report: &ThresholdReport) -> csv::Result<()> {
    let mut t = Table::start(
        out,
        prov,
        "thresholds=dB (-inf: infeasible at the lowest gap), tolerances: aoi=minislots, pv=probability",
        &["quantity", "scheme", "value"],
    )?;
    for (name, th) in [("noma", &report.noma), ("rsma", &report.rsma)] {
        t.row(["threshold_aoi_db", name, &num(th.aoi_db)])?;
        t.row(["threshold_pv_db", name, &num(th.paoi_db)])?;
        t.row(["threshold_combined_db", name, &num(th.combined_db)])?;
        t.row(["non_monotonic", name, &th.non_monotonic.to_string()])?;
    }
    t.row(["crossover_db", "", &opt(report.crossover_db)])?;
    t.row(["crossings", "", &report.crossings.to_string()])?;
    t.row(["tolerance_aoi", "", &num(report.tolerances.aoi)])?;
    t.row(["tolerance_pv", "", &num(report.tolerances.paoi)])?;
    t.row(["refined", "", &report.refined.to_string()])?;
    for iv in &report.scheme_map {
        t.row(["map_interval", iv.scheme.as_str(), &format!("({}, {}]", iv.from_db, iv.to_db)])?;
    }
    t.finish()
}

pub fn write_adaptive<W: Write>(out: W, prov: &Provenance, curve: &[AdaptivePoint]) -> csv::Result<()> {
    let mut t = Table::start(
        out,
        prov,
        "gamma_db=dB, rate=bit/s",
        &["gamma_db", "scheme", "rate", "punc_rate"],
    )?;
    for a in curve {
        t.row([num(a.gap_db), a.scheme.to_string(), num(a.embb_rate), num(a.punc_rate)])?;
    }
    t.finish()
}

pub fn write_activation<W: Write>(out: W, prov: &Provenance, rows: &[ActivationRow]) -> csv::Result<()> {
    let mut t = Table::start(
        out,
        prov,
        "p_m=probability, thresholds=dB",
        &["p_m", "noma_threshold_db", "rsma_threshold_db", "crossover_db"],
    )?;
    for r in rows {
        t.row([num(r.activation_prob), num(r.noma_db), num(r.rsma_db), opt(r.report.crossover_db)])?;
    }
    t.finish()
}

/// Lookup table. With a second table (the other method on the same gaps),
/// both are listed and `objective_diff` holds `s_grid - s_gwo` per gap.
pub fn write_lookup<W: Write>(
    out: W,
    prov: &Provenance,
    table: &LookupTable,
    other: Option<&LookupTable>,
) -> csv::Result<()> {
    let units = "gamma_db=dB, omega_star/lambda_star=fraction, s_star=probability";
    match other {
        None => {
            let mut out = out;
            writeln!(out, "# config_digest={} seed={}", prov.config_digest, prov.seed)?;
            writeln!(out, "# units: {units}")?;
            table.write_csv(out)
        }
        Some(other) => {
            let mut t = Table::start(
                out,
                prov,
                units,
                &["gamma_db", "omega_star", "lambda_star", "s_star", "method", "seed", "objective_diff"],
            )?;
            for (a, b) in table.entries.iter().zip(&other.entries) {
                let diff = num(a.solution.objective - b.solution.objective);
                for (e, seed) in [(a, table.seed), (b, other.seed)] {
                    let s = &e.solution;
                    t.row([
                        num(e.gap_db),
                        num(s.split.power_split),
                        num(s.split.rate_split),
                        num(s.objective),
                        s.method.to_string(),
                        seed.to_string(),
                        diff.clone(),
                    ])?;
                }
            }
            t.finish()
        }
    }
}

/// Raw peak-AoI histogram.
pub fn write_peaks<W: Write>(out: W, prov: &Provenance, peaks: &BTreeMap<u64, u64>) -> csv::Result<()> {
    let mut t = Table::start(out, prov, "peak_value=minislots", &["peak_value", "count"])?;
    for (k, c) in peaks {
        t.row([k.to_string(), c.to_string()])?;
    }
    t.finish()
}

/// Renders into memory, for callers that digest or compare outputs.
pub fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(io::Error::other)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;

    fn prov() -> Provenance {
        Provenance {
            config_digest: "ab".repeat(32),
            seed: 7,
        }
    }

    #[test]
    fn every_file_starts_with_provenance_and_units() {
        let mut peaks = BTreeMap::new();
        peaks.insert(1, 10);
        peaks.insert(3, 2);
        let bytes = to_bytes(|b| write_peaks(b, &prov(), &peaks)).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# config_digest={} seed=7", "ab".repeat(32)));
        assert!(lines[1].starts_with("# units:"));
        assert_eq!(&lines[2..], ["peak_value,count", "1,10", "3,2"]);
    }

    #[test]
    fn metrics_row_leaves_split_blank_without_rsma() {
        let m = SchemeMetrics {
            scheme: Scheme::Punc,
            success: 0.5,
            avg_aoi: 2.5,
            paoi_violation: 0.1,
            embb_rate: 1e5,
            rsma_split: None,
        };
        let text = String::from_utf8(to_bytes(|b| write_metrics(b, &prov(), 3.0, &m, None)).unwrap()).unwrap();
        assert_eq!(text.lines().last().unwrap(), "3,punc,0.5,2.5,0.1,100000,,");
    }
}
