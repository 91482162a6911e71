//! CSV and markdown emission. Every file starts with the resolved config and a
//! build fingerprint; runtimes go to a separate file so reruns stay byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use robust_gan::Result;

use crate::runner::{CellRecord, ExperimentResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// `"mean (sd)"` at 4 decimals; ties round half to even on the exact binary value.
pub fn format_cell(mean: f64, sd: Option<f64>) -> String {
    match sd {
        Some(sd) => format!("{mean:.4} ({sd:.4})"),
        None => format!("{mean:.4}"),
    }
}

pub fn build_fingerprint() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Comment lines (without the comment marker) carrying the resolved config and
/// the build fingerprint.
pub fn provenance_lines<T: Serialize>(config: &T) -> Result<Vec<String>> {
    let config = serde_json::to_string(config)?;
    let digest = Sha256::digest(config.as_bytes());
    let short: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    Ok(vec![
        format!("config: {config}"),
        format!("build: {} config-sha256:{short}", build_fingerprint()),
    ])
}

fn header_lines(res: &ExperimentResult) -> Result<Vec<String>> {
    provenance_lines(&res.config)
}

fn status(c: &CellRecord) -> String {
    match &c.failure {
        None => "ok".into(),
        Some(reason) => format!("failed: {}", reason.replace([',', '\n'], ";")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_csv<W: Write>(res: &ExperimentResult, mut out: W) -> Result<()> {
    for line in header_lines(res)? {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "eps,p,n,t,q,method,status,mean,sd,cell,mean_l1_w,op_errors,errors")?;
    for c in &res.cells {
        let cell = if c.failure.is_none() {
            format_cell(c.mean, c.sd)
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.eps,
            c.p,
            c.n,
            c.t,
            c.q,
            c.method,
            status(c),
            if c.failure.is_none() {
                c.mean.to_string()
            } else {
                String::new()
            },
            opt(c.sd),
            cell,
            opt(c.mean_l1_w),
            c.op_errors.as_deref().map_or_else(String::new, join),
            join(&c.errors),
        )?;
    }
    Ok(())
}

/// One row per dataset cell, one column per estimator.
pub fn write_markdown<W: Write>(res: &ExperimentResult, mut out: W) -> Result<()> {
    for line in header_lines(res)? {
        writeln!(out, "<!-- {line} -->")?;
    }
    let methods: Vec<String> = res.config.estimators.iter().map(|e| e.label()).collect();
    writeln!(out, "| eps | p | n | t | Q | {} |", methods.join(" | "))?;
    writeln!(out, "|---|---|---|---|---|{}", "---|".repeat(methods.len()))?;
    for row in res.cells.chunks(methods.len().max(1)) {
        let Some(first) = row.first() else { continue };
        let entries: Vec<String> = row
            .iter()
            .map(|c| match c.failure {
                None => format_cell(c.mean, c.sd),
                Some(_) => "failed".into(),
            })
            .collect();
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            first.eps,
            first.p,
            first.n,
            first.t,
            first.q,
            entries.join(" | ")
        )?;
    }
    Ok(())
}

pub fn write_timing<W: Write>(res: &ExperimentResult, mut out: W) -> Result<()> {
    for line in header_lines(res)? {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "eps,p,n,t,q,method,runtime_secs")?;
    for c in &res.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3}",
            c.eps, c.p, c.n, c.t, c.q, c.method, c.runtime_secs
        )?;
    }
    Ok(())
}

/// Writes `<name>.csv` / `<name>.md` plus `<name>.timing.csv` into `dir`.
pub fn emit_tables(res: &ExperimentResult, dir: &Path, formats: &[TableFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = &res.config.name;
    let mut written = Vec::new();
    for fmt in formats {
        let path = match fmt {
            TableFormat::Csv => dir.join(format!("{name}.csv")),
            TableFormat::Markdown => dir.join(format!("{name}.md")),
        };
        let mut buf = Vec::new();
        match fmt {
            TableFormat::Csv => write_csv(res, &mut buf)?,
            TableFormat::Markdown => write_markdown(res, &mut buf)?,
        }
        fs::write(&path, buf)?;
        written.push(path);
    }
    let timing = dir.join(format!("{name}.timing.csv"));
    let mut buf = Vec::new();
    write_timing(res, &mut buf)?;
    fs::write(&timing, buf)?;
    written.push(timing);
    Ok(written)
}
