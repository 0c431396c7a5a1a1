// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Output files, their schema checks, and the job runner that writes the
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use robust_ghz::optim::{OptimizationTrace, Termination};
use robust_ghz::pulse::PulseSet;
use robust_ghz::robustness::{AuditReport, FidelityReport};
use robust_ghz::sensing::SensingCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Pulse,
    CenterReport,
    ArmReport,
    Trace,
    Sensing,
    /// Pulse-figure table with this many columns.
    PulseFigure(usize),
    Audit,
}

/// Non-robust reference pulse optimized at the mean coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterReport {
    pub seed: u64,
    pub fidelity: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub converged: bool,
}

/// One (level, arm) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmReport {
    pub delta_j: f64,
    pub arm: Arm,
    /// Robust method; absent for the non-robust arm.
    pub method: Option<robust_ghz::optim::RobustMethod>,
    pub seeds: Vec<u64>,
    pub best_seed: u64,
    /// Worst case of every start, in seed order.
    pub start_worst_cases: Vec<f64>,
    pub center_fidelity: f64,
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub fidelity: FidelityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Robust,
    Nonrobust,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Robust, Arm::Nonrobust];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Robust => "robust",
            Arm::Nonrobust => "nonrobust",
        }
    }
}

pub struct Artifact {
    pub path: PathBuf,
    pub contents: String,
    pub kind: Kind,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, contents: String, kind: Kind) -> Self {
        Self { path: path.into(), contents, kind }
    }
}

pub fn to_json<S: Serialize>(v: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Header row, units row, then rows of equal width whose cells are
/// numbers, booleans or empty.
pub fn check_csv(text: &str, columns: &[&str], units: &[&str]) -> Result<usize> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(columns.join(",").as_str()), "unexpected CSV header");
    ensure!(lines.next() == Some(units.join(",").as_str()), "unexpected CSV units row");
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        ensure!(cells.len() == columns.len(), "row {k}: {} cells, expected {}", cells.len(), columns.len());
        for c in cells {
            let ok = c.is_empty() || c == "true" || c == "false" || c.parse::<f64>().is_ok();
            ensure!(ok, "row {k}: bad cell {c:?}");
        }
        rows += 1;
    }
    Ok(rows)
}

pub fn validate(kind: Kind, text: &str) -> Result<()> {
    match kind {
        Kind::Pulse => {
            PulseSet::<f64>::from_json(text)?;
        }
        Kind::CenterReport => {
            serde_json::from_str::<CenterReport>(text)?;
        }
        Kind::ArmReport => {
            let r: ArmReport = serde_json::from_str(text)?;
            ensure!(!r.fidelity.groups.is_empty(), "report without groups");
        }
        Kind::Audit => {
            serde_json::from_str::<AuditReport>(text)?;
        }
        Kind::Trace => {
            let rows = check_csv(
                text,
                &OptimizationTrace::<f64>::CSV_COLUMNS,
                &OptimizationTrace::<f64>::CSV_UNITS,
            )?;
            ensure!(rows >= 1, "empty trace");
        }
        Kind::Sensing => {
            check_csv(text, &SensingCurve::<f64>::CSV_COLUMNS, &SensingCurve::<f64>::CSV_UNITS)?;
        }
        Kind::PulseFigure(width) => {
            let mut lines = text.lines();
            let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
            let units: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
            ensure!(header.len() == width, "pulse figure has {} columns, expected {width}", header.len());
            check_csv(text, &header, &units)?;
        }
    }
    Ok(())
}

/// Failure carried by a well-formed output: a sampling audit that found
/// points below the worst case.
pub fn verdict(kind: Kind, text: &str) -> Option<String> {
    let audit = match kind {
        Kind::ArmReport => serde_json::from_str::<ArmReport>(text).ok()?.fidelity.audit?,
        Kind::Audit => serde_json::from_str::<AuditReport>(text).ok()?,
        _ => return None,
    };
    (!audit.passed).then(|| {
        format!(
            "audit: {} of {} samples below the worst case {:.12}, minimum {:.12} at {:?}",
            audit.violation_count, audit.samples, audit.worst_case, audit.min_sampled, audit.min_point
        )
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling so a crash never leaves a partial
/// file that would later be mistaken for a finished output.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub name: String,
    pub delta_j: Option<f64>,
    pub arm: Option<Arm>,
    pub status: JobStatus,
    pub error: Option<String>,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    /// Output path relative to the run directory → sha256.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub finished_unix_s: u64,
    pub all_ok: bool,
    pub config: crate::config::ExperimentConfig,
    pub jobs: Vec<JobRecord>,
}

type JobFn<'a> = Box<dyn Fn() -> Result<Vec<Artifact>> + Send + Sync + 'a>;

pub struct Job<'a> {
    pub name: String,
    pub delta_j: Option<f64>,
    pub arm: Option<Arm>,
    pub seeds: Vec<u64>,
    /// Paths relative to the run directory, with their kinds. When all
    /// exist and the run is not forced, the job is skipped.
    pub outputs: Vec<(PathBuf, Kind)>,
    pub run: JobFn<'a>,
}

pub struct Runner<'a> {
    pub root: &'a Path,
    pub force: bool,
}

impl Runner<'_> {
    fn hash_existing(&self, outputs: &[(PathBuf, Kind)]) -> Result<(BTreeMap<String, String>, Vec<String>)> {
        let mut files = BTreeMap::new();
        let mut failures = Vec::new();
        for (rel, kind) in outputs {
            let text = fs::read_to_string(self.root.join(rel)).with_context(|| format!("reading {}", rel.display()))?;
            validate(*kind, &text).with_context(|| format!("existing {} fails its schema", rel.display()))?;
            failures.extend(verdict(*kind, &text));
            files.insert(rel.display().to_string(), sha256_hex(text.as_bytes()));
        }
        Ok((files, failures))
    }

    fn execute(&self, job: &Job<'_>) -> Result<(JobStatus, BTreeMap<String, String>, Vec<String>)> {
        if !self.force && job.outputs.iter().all(|(p, _)| self.root.join(p).is_file()) {
            let (files, failures) = self.hash_existing(&job.outputs)?;
            return Ok((JobStatus::Skipped, files, failures));
        }
        let artifacts = (job.run)()?;
        for (rel, kind) in &job.outputs {
            if !artifacts.iter().any(|a| &a.path == rel && a.kind == *kind) {
                bail!("job did not produce {}", rel.display());
            }
        }
        for a in &artifacts {
            validate(a.kind, &a.contents).with_context(|| format!("{} fails its schema", a.path.display()))?;
        }
        let mut files = BTreeMap::new();
        let mut failures = Vec::new();
        for a in &artifacts {
            write_atomic(&self.root.join(&a.path), &a.contents)?;
            failures.extend(verdict(a.kind, &a.contents));
            files.insert(a.path.display().to_string(), sha256_hex(a.contents.as_bytes()));
        }
        Ok((JobStatus::Ok, files, failures))
    }

    /// Runs jobs concurrently; records come back in job order.
    pub fn run_all(&self, jobs: &[Job<'_>]) -> Vec<JobRecord> {
        jobs.par_iter()
            .map(|job| {
                let start = Instant::now();
                let outcome = self.execute(job);
                let wall_time_s = start.elapsed().as_secs_f64();
                let (status, error, files) = match outcome {
                    Ok((s, f, failures)) if failures.is_empty() => (s, None, f),
                    Ok((_, f, failures)) => (JobStatus::Failed, Some(failures.join("; ")), f),
                    Err(e) => (JobStatus::Failed, Some(format!("{e:#}")), BTreeMap::new()),
                };
                JobRecord {
                    name: job.name.clone(),
                    delta_j: job.delta_j,
                    arm: job.arm,
                    status,
                    error,
                    seeds: job.seeds.clone(),
                    wall_time_s,
                    files,
                }
            })
            .collect()
    }
}

/// Writes `manifest.json` under `dir` and reports whether every job succeeded.
pub fn write_manifest(dir: &Path, command: &str, config: &crate::config::ExperimentConfig, jobs: Vec<JobRecord>) -> Result<bool> {
    let all_ok = jobs.iter().all(|j| j.status != JobStatus::Failed);
    let manifest = Manifest {
        command: command.to_string(),
        finished_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        all_ok,
        config: config.clone(),
        jobs,
    };
    write_atomic(&dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(all_ok)
}
