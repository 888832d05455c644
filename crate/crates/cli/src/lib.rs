//! Batch verification driver: configuration, suites and JSON-lines reports.

pub mod circle_suite;
pub mod compute;
pub mod config;
pub mod matrix_suite;
pub mod report;
mod worst;

use std::path::{Path, PathBuf};

use twisted_core::Result;

use crate::config::{Config, Overrides};
use crate::report::Report;

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub overrides: Overrides,
    pub out: Option<PathBuf>,
}

impl RunOptions {
    pub fn load(&self) -> Result<Config> {
        Config::load(self.config.as_deref(), &self.overrides)
    }

    /// Tables go to the configured directory, else next to the report.
    fn tables_dir(&self, cfg: &Config) -> PathBuf {
        if let Some(d) = &cfg.tables_dir {
            return d.clone();
        }
        match self.out.as_deref().and_then(Path::parent) {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        }
    }
}

fn finish(report: &Report, opts: &RunOptions) -> Result<bool> {
    report.emit(opts.out.as_deref())?;
    Ok(report.all_pass())
}

/// Runs the matrix suite; returns whether every row passed.
pub fn verify_matrix(opts: &RunOptions) -> Result<bool> {
    let cfg = opts.load()?;
    let mut report = Report::new("verify-matrix", cfg.to_json());
    report.extend(matrix_suite::run(&cfg)?);
    finish(&report, opts)
}

pub fn verify_circle(opts: &RunOptions) -> Result<bool> {
    let mut cfg = opts.load()?;
    let tables = opts.tables_dir(&cfg);
    cfg.tables_dir = Some(tables.clone());
    let mut report = Report::new("verify-circle", cfg.to_json());
    report.extend(circle_suite::run(&cfg, &tables)?);
    finish(&report, opts)
}

/// Prints the value on stdout, then the report.
pub fn compute(opts: &RunOptions, expr: &str, args: &str) -> Result<bool> {
    let expr: compute::Expression = expr.parse()?;
    let cfg = opts.load()?;
    let out = compute::evaluate(&cfg, expr, args)?;
    println!("{}", out.value);
    let mut report = Report::new("compute", cfg.to_json());
    report.extend(out.rows);
    finish(&report, opts)
}

/// Prints the residue result as JSON, then the report.
pub fn residue(opts: &RunOptions, args: &str) -> Result<bool> {
    let cfg = opts.load()?;
    let a: compute::ResidueArgs =
        serde_json::from_str(args).map_err(|e| twisted_core::Error::InvalidArgument(format!("arguments: {e}")))?;
    let (res, rows) = compute::residue(&cfg, &a)?;
    println!("{}", serde_json::to_string(&res).map_err(|e| twisted_core::Error::Config(e.to_string()))?);
    let mut report = Report::new("residue", cfg.to_json());
    report.extend(rows);
    finish(&report, opts)
}
