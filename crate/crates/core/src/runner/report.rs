//! Table and report writers for an [`AuditReport`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::{BootstrapCi, PairedTestResult, Significance};
use crate::strategy::Strategy;

use super::analyze::AuditReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Md,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Md),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

fn pct(v: Option<f64>) -> String {
    opt(v.map(|x| 100.0 * x), 1)
}

fn ci(c: Option<&BootstrapCi>, scale: f64, digits: usize) -> (String, String) {
    match c {
        Some(c) => (format!("{:.digits$}", c.lo * scale), format!("{:.digits$}", c.hi * scale)),
        None => (String::new(), String::new()),
    }
}

fn md_ci(c: Option<&BootstrapCi>, scale: f64, digits: usize) -> String {
    match c {
        Some(_) => {
            let (lo, hi) = ci(c, scale, digits);
            format!("[{lo}, {hi}]")
        }
        None => "n/a".into(),
    }
}

fn stars(t: &PairedTestResult) -> &'static str {
    let has = |s| t.significant_at.contains(&s);
    if has(Significance::P001) {
        "***"
    } else if has(Significance::P01) {
        "**"
    } else if has(Significance::P05) {
        "*"
    } else {
        ""
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn accuracy_table(report: &AuditReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["endpoint", "strategy", "n_pairs", "exact_pct", "within1_pct", "kappa_w", "flip_pct", "fm_ratio", "dpd"])?;
    for c in &report.cells {
        let acc = c.report.accuracy.as_ref();
        w.write_record([
            c.endpoint_id.clone(),
            c.strategy.to_string(),
            c.report.n_pairs.to_string(),
            opt(acc.map(|a| a.exact_pct), 1),
            opt(acc.map(|a| a.within1_pct), 1),
            opt(acc.and_then(|a| a.kappa_w), 3),
            pct(c.report.pairs.flip_rate),
            c.report.pairs.fm_ratio.to_string(),
            opt(c.report.dpd, 4),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn calibration_table(report: &AuditReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["endpoint", "strategy", "esi", "n_f", "rate_f", "n_m", "rate_m", "qualifies", "cal_gap"])?;
    for c in &report.cells {
        for r in &c.report.calibration.rows {
            w.write_record([
                c.endpoint_id.clone(),
                c.strategy.to_string(),
                r.level.to_string(),
                r.n_f.to_string(),
                opt(r.rate_f, 4),
                r.n_m.to_string(),
                opt(r.rate_m, 4),
                r.qualifies.to_string(),
                opt(c.report.cal_gap, 4),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn directional_table(report: &AuditReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "endpoint", "strategy", "flip_pct", "flip_ci_lo", "flip_ci_hi", "f_ut", "m_ut", "fm_ratio", "fm_ci_lo",
        "fm_ci_hi", "profile", "note",
    ])?;
    for c in &report.cells {
        let (flo, fhi) = ci(c.flip_ci.as_ref(), 100.0, 1);
        let (rlo, rhi) = ci(c.fm_ci.as_ref(), 1.0, 2);
        w.write_record([
            c.endpoint_id.clone(),
            c.strategy.to_string(),
            pct(c.report.pairs.flip_rate),
            flo,
            fhi,
            c.report.pairs.f_ut.to_string(),
            c.report.pairs.m_ut.to_string(),
            c.report.pairs.fm_ratio.to_string(),
            rlo,
            rhi,
            c.profile.map_or("", |p| p.label()).to_string(),
            c.bootstrap_note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn pairwise_table(report: &AuditReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "a", "b", "shared_pairs", "flip_a_pct", "flip_b_pct", "delta_pp", "mcnemar_chi2", "mcnemar_p", "mcnemar_sig",
        "bonferroni", "fm_a", "fm_b", "direction_chi2", "direction_p", "direction_sig",
    ])?;
    for t in &report.pairwise_tests {
        let (dchi, dp, dsig) = match &t.direction_test {
            Some(d) => (format!("{:.2}", d.statistic), format!("{:.3e}", d.p), stars(d).to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            t.a.clone(),
            t.b.clone(),
            t.shared_pairs.to_string(),
            pct(t.flip_a),
            pct(t.flip_b),
            opt(t.delta_pp, 1),
            format!("{:.2}", t.flip_test.statistic),
            format!("{:.3e}", t.flip_test.p),
            stars(&t.flip_test).to_string(),
            t.flip_test.significant_at.contains(&Significance::Bonferroni).to_string(),
            t.fm_a.to_string(),
            t.fm_b.to_string(),
            dchi,
            dp,
            dsig,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strata_table(report: &AuditReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["endpoint", "strategy", "stratify_by", "stratum", "n_pairs", "flip_pct", "f_ut", "m_ut", "fm_ratio", "small"])?;
    for c in &report.cells {
        for (by, rows) in &c.report.strata {
            for (key, s) in rows {
                w.write_record([
                    c.endpoint_id.clone(),
                    c.strategy.to_string(),
                    by.label().to_string(),
                    key.clone(),
                    s.n_pairs.to_string(),
                    pct(s.flip_rate),
                    s.f_ut.to_string(),
                    s.m_ut.to_string(),
                    s.fm_ratio.to_string(),
                    s.small.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Human-readable summary of every cell and pairwise comparison.
pub fn markdown(report: &AuditReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Triage audit report\n");
    let _ = writeln!(s, "Population for group metrics: {:?}. Bootstrap iterations: {}.\n", report.options.population, report.options.bootstrap.iterations);
    let _ = writeln!(s, "| Endpoint | Strategy | Pairs | Exact % | Flip % | Flip 95% CI | F/M | F/M 95% CI | DPD | Profile |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
    for c in &report.cells {
        let flip_ci = md_ci(c.flip_ci.as_ref(), 100.0, 1);
        let fm_ci = md_ci(c.fm_ci.as_ref(), 1.0, 2);
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {flip_ci} | {} | {fm_ci} | {} | {} |",
            c.endpoint_id,
            c.strategy,
            c.report.n_pairs,
            opt(c.report.accuracy.as_ref().map(|a| a.exact_pct), 1),
            pct(c.report.pairs.flip_rate),
            c.report.pairs.fm_ratio,
            opt(c.report.dpd, 4),
            c.profile.map_or("", |p| p.label()),
        );
    }
    let notes: Vec<_> = report
        .cells
        .iter()
        .filter_map(|c| c.bootstrap_note.as_ref().map(|n| format!("- {} / {}: {n}", c.endpoint_id, c.strategy)))
        .collect();
    if !notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n\n{}", notes.join("\n"));
    }
    if !report.pairwise_tests.is_empty() {
        let _ = writeln!(s, "\n## Pairwise flip comparisons\n");
        let _ = writeln!(s, "Bonferroni: {} tests, alpha {:.5}.\n", report.bonferroni_tests, report.bonferroni_alpha);
        let _ = writeln!(s, "| A | B | Shared | Delta pp | McNemar chi2 | p | Direction chi2 |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for t in &report.pairwise_tests {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.2}{} | {:.3e} | {} |",
                t.a,
                t.b,
                t.shared_pairs,
                opt(t.delta_pp, 1),
                t.flip_test.statistic,
                stars(&t.flip_test),
                t.flip_test.p,
                t.direction_test.as_ref().map_or(String::new(), |d| format!("{:.2}{}", d.statistic, stars(d))),
            );
        }
    }
    if !report.parse_failures.is_empty() {
        let _ = writeln!(s, "\n## Parse failures\n\n{} responses had no parseable ESI level.", report.parse_failures.len());
    }
    s
}

/// Writes the report in `format` under `dir` and returns the written paths.
pub fn write_reports(report: &AuditReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let tables: [(&str, fn(&AuditReport, &Path) -> Result<()>); 5] = [
                ("accuracy_fairness.csv", accuracy_table),
                ("calibration.csv", calibration_table),
                ("directional.csv", directional_table),
                ("pairwise_tests.csv", pairwise_table),
                ("strata.csv", strata_table),
            ];
            for (name, f) in tables {
                let path = dir.join(name);
                f(report, &path)?;
                written.push(path);
            }
        }
        ReportFormat::Json => {
            let path = dir.join("report.json");
            let text = serde_json::to_string_pretty(report)?;
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        ReportFormat::Md => {
            let path = dir.join("report.md");
            std::fs::write(&path, markdown(report)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes each strategy's system prompt as `<strategy>.txt`.
pub fn export_prompts(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in Strategy::ALL {
        let path = dir.join(format!("{}.txt", s.as_str()));
        std::fs::write(&path, s.system_prompt()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
