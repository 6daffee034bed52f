//! Writing reports to disk.
//!
//! A run directory holds `distributions.csv`, `estimators.csv`,
//! `summary.txt` and `meta.txt`. The meta file is the config echo preceded by
//! `#` comment lines (version, wall time, threads), so it parses back to the
//! same config.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::report::ComparisonReport;
use super::sweep::SweepReport;

/// Which files to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    All,
    Csv,
    Text,
}

impl FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EmitFormat::All),
            "csv" => Ok(EmitFormat::Csv),
            "text" => Ok(EmitFormat::Text),
            other => Err(Error::Unknown { kind: "output format", name: other.into() }),
        }
    }
}

impl EmitFormat {
    fn csv(self) -> bool {
        matches!(self, EmitFormat::All | EmitFormat::Csv)
    }

    fn text(self) -> bool {
        matches!(self, EmitFormat::All | EmitFormat::Text)
    }
}

pub fn meta_text(cfg: &ExperimentConfig, wall_time: f64, threads: usize) -> String {
    format!(
        "# hitlab {}\n# wall_time_s {wall_time:.3}\n# threads {threads}\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.echo()
    )
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn create(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn emit_report(report: &ComparisonReport, dir: &Path, format: EmitFormat) -> Result<Vec<PathBuf>> {
    create(dir)?;
    let mut out = Vec::new();
    if format.csv() {
        write(dir, "distributions.csv", &report.distributions_csv(), &mut out)?;
        write(dir, "estimators.csv", &report.estimators_csv(), &mut out)?;
    }
    if format.text() {
        write(dir, "summary.txt", &report.summary_text(), &mut out)?;
        write(dir, "meta.txt", &meta_text(&report.config, report.wall_time, report.threads), &mut out)?;
    }
    Ok(out)
}

/// `sweep.csv` and the sweep summary at the top, one `point_XX` directory per full run.
pub fn emit_sweep(sweep: &SweepReport, dir: &Path, format: EmitFormat) -> Result<Vec<PathBuf>> {
    create(dir)?;
    let mut out = Vec::new();
    if format.csv() {
        write(dir, "sweep.csv", &sweep.to_csv(), &mut out)?;
    }
    if format.text() {
        write(dir, "summary.txt", &sweep.summary_text(), &mut out)?;
        write(dir, "meta.txt", &meta_text(&sweep.config, sweep.wall_time, rayon::current_num_threads()), &mut out)?;
    }
    for (i, p) in sweep.points.iter().enumerate() {
        if let Some(r) = &p.report {
            out.extend(emit_report(r, &dir.join(format!("point_{i:02}")), format)?);
        }
    }
    Ok(out)
}
