//! Batch commands behind the `orthoasym` binary. Each command reads a JSON
//! configuration, writes its reports under an output directory and returns
//! whether every check held.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measure::{recurrence_for, BaseMeasureSpec, Precision, RecurrenceTable};
use crate::verify::{
    bundled, emit_report, run_verification, run_zero_attraction, ExperimentConfig, ReportFormat, ZeroCheck,
    SCHEMA_VERSION,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Process exit status for a command outcome.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const IO: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => exit::IO,
        Error::Config(_) | Error::InvalidSpec(_) | Error::OnCut { .. } | Error::Serde(_) | Error::NotRegular(_) => {
            exit::CONFIG
        }
        _ => exit::NUMERICAL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceConfig {
    pub measure: BaseMeasureSpec,
    pub nmax: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub schema_version: u32,
    pub measure: BaseMeasureSpec,
    pub nmax: usize,
    pub mass: f64,
    pub table: RecurrenceTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZerosReport {
    pub schema_version: u32,
    pub scenario: String,
    pub checks: Vec<ZeroCheck>,
    pub passed: bool,
}

/// Where a command takes its configuration from.
#[derive(Debug, Clone)]
pub enum Source {
    File(PathBuf),
    Bundled(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub precision: Precision,
    pub mode: Execution,
}

/// Files written and the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub passed: bool,
}

impl Outcome {
    pub fn code(&self) -> i32 {
        if self.passed {
            exit::PASS
        } else {
            exit::ASSERTION
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn experiment(source: &Source) -> Result<ExperimentConfig> {
    match source {
        Source::Bundled(name) => bundled(name),
        Source::File(path) => {
            let mut cfg = ExperimentConfig::from_json(&read(path)?)?;
            if cfg.name.is_empty() {
                cfg.name = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("experiment")
                    .to_string();
            }
            cfg.validated()
        }
    }
}

/// Recurrence table for `{"measure": ..., "nmax": N}`, written to
/// `recurrence.json`.
pub fn cmd_recurrence(config: &Path, opts: &RunOptions) -> Result<Outcome> {
    let cfg: RecurrenceConfig = serde_json::from_str(&read(config)?).map_err(|e| Error::Config(e.to_string()))?;
    cfg.measure.validate()?;
    let table = recurrence_for(&cfg.measure, cfg.nmax)?;
    prepare(&opts.out)?;
    let path = opts.out.join("recurrence.json");
    write_json(
        &RecurrenceReport {
            schema_version: SCHEMA_VERSION,
            mass: table.mass(),
            measure: cfg.measure,
            nmax: cfg.nmax,
            table,
        },
        &path,
    )?;
    Ok(Outcome {
        written: vec![path],
        passed: true,
    })
}

/// Ratio ladders, uniform checks and zero counts. Writes `<name>.json` and
/// one `<name>_<kind>.csv` per ratio kind unless the configuration names
/// other files.
pub fn cmd_verify(source: &Source, opts: &RunOptions) -> Result<Outcome> {
    let cfg = experiment(source)?;
    let report = run_verification(&cfg, opts.precision, opts.mode)?;
    prepare(&opts.out)?;
    let json = opts
        .out
        .join(cfg.outputs.json.clone().unwrap_or_else(|| format!("{}.json", cfg.name)));
    let csv = opts
        .out
        .join(cfg.outputs.csv.clone().unwrap_or_else(|| format!("{}.csv", cfg.name)));
    let mut written = emit_report(&report, ReportFormat::Json, &json)?;
    written.extend(emit_report(&report, ReportFormat::Csv, &csv)?);
    Ok(Outcome {
        written,
        passed: report.passed,
    })
}

/// Zero counts near the attraction centers, written to `<name>_zeros.json`.
pub fn cmd_zeros(source: &Source, opts: &RunOptions) -> Result<Outcome> {
    let cfg = experiment(source)?;
    if cfg.zeros.is_none() {
        return Err(Error::Config(format!("scenario {} has no zeros section", cfg.name)));
    }
    let checks = run_zero_attraction(&cfg, opts.mode)?;
    let passed = checks.iter().all(|c| c.passed);
    prepare(&opts.out)?;
    let path = opts.out.join(format!("{}_zeros.json", cfg.name));
    write_json(
        &ZerosReport {
            schema_version: SCHEMA_VERSION,
            scenario: cfg.name.clone(),
            checks,
            passed,
        },
        &path,
    )?;
    Ok(Outcome {
        written: vec![path],
        passed,
    })
}
