//! Seeded Monte-Carlo studies: rejection rates under the null (level
//! calibration) and under fixed alternatives (power snapshots).
//!
//! Replication r of study cell c draws from substream (seed, c, r), and the
//! per-cell results are integer counts, so a report does not depend on the
//! number of worker threads or their scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::KnownMask;
use crate::families::{EstimatorKind, FamilyId};
use crate::gof::{evaluate, MAX_FAILED_FRACTION};
use crate::rng::substream;

/// Smallest accepted number of replications per cell.
pub const MIN_REPS: usize = 100;

/// One simulated configuration: data drawn from `data_family(data_theta)`
/// are tested against `family` with the given estimator and known values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Null family.
    pub family: FamilyId,
    /// Estimator of the unknown null parameters.
    pub estimator: EstimatorKind,
    /// Known null parameters as (name, value) bindings.
    pub known: Vec<(String, f64)>,
    /// Family generating the data.
    pub data_family: FamilyId,
    /// Parameter of the data-generating family.
    pub data_theta: Vec<f64>,
}

impl Cell {
    /// Cell whose data come from the null family itself.
    pub fn null(family: FamilyId, estimator: EstimatorKind, theta: Vec<f64>) -> Self {
        Cell { family, estimator, known: Vec::new(), data_family: family, data_theta: theta }
    }

    /// Short label `null[estimator;name=value]<-data` used in reports.
    pub fn label(&self) -> String {
        let mut s = format!("{}[{}", self.family.name(), self.estimator);
        for (k, v) in &self.known {
            let _ = write!(s, ";{k}={v}");
        }
        s.push(']');
        if self.data_family != self.family {
            let _ = write!(s, "<-{}", self.data_family.name());
        }
        s
    }
}

/// A Monte-Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Null cells (data drawn from the null family).
    pub cells: Vec<Cell>,
    /// Alternative cells (data drawn from another family).
    pub alternatives: Vec<Cell>,
    /// Sample sizes.
    pub n_grid: Vec<usize>,
    /// Replications per (cell, n).
    pub reps: usize,
    /// Significance level.
    pub alpha_level: f64,
    /// Master seed.
    pub seed: u64,
}

/// Result of one (cell, n) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    /// Cell label.
    pub cell: String,
    /// Null family.
    pub family: FamilyId,
    /// Estimator.
    pub estimator: EstimatorKind,
    /// Data-generating family.
    pub data_family: FamilyId,
    /// Sample size.
    pub n: usize,
    /// Successful replications.
    pub reps: usize,
    /// Rejections at the study level.
    pub rejections: usize,
    /// Rejection rate over the successful replications.
    pub rate: f64,
    /// √(rate(1 − rate)/reps).
    pub std_error: f64,
    /// Replications whose fit or Σ failed.
    pub failed: usize,
    /// More than 1% of the replications failed, or the cell could not run.
    pub flagged: bool,
    /// Configuration error that prevented the cell from running.
    pub error: Option<String>,
}

/// Rows of a study plus its wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    /// One row per (cell, n), cells in configuration order.
    pub rows: Vec<StudyRow>,
    /// Elapsed wall-clock time in seconds (not part of the deterministic output).
    pub wall_time_secs: f64,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::config(format!("reps must be at least {MIN_REPS}, got {}", self.reps)));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha_level)));
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::config("the n grid must be nonempty with every n >= 2"));
        }
        Ok(())
    }
}

/// Rejection rates under the null for every cell of `cfg.cells`.
pub fn level_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.cells.is_empty() {
        return Err(Error::config("level study needs at least one cell"));
    }
    Ok(run_cells(cfg, &cfg.cells, 0))
}

/// Rejection rates of the alternative cells.
pub fn power_snapshot(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.alternatives.is_empty() {
        return Err(Error::config("power snapshot needs at least one alternative"));
    }
    // Offset the cell keys so the alternatives never share substreams with
    // the null cells of the same configuration.
    Ok(run_cells(cfg, &cfg.alternatives, cfg.cells.len() * cfg.n_grid.len()))
}

fn run_cells(cfg: &StudyConfig, cells: &[Cell], key_offset: usize) -> StudyReport {
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cells.len() * cfg.n_grid.len());
    for (ci, cell) in cells.iter().enumerate() {
        for (ni, &n) in cfg.n_grid.iter().enumerate() {
            let key = (key_offset + ci * cfg.n_grid.len() + ni) as u64;
            rows.push(run_cell(cfg, cell, n, key));
        }
    }
    StudyReport { rows, wall_time_secs: start.elapsed().as_secs_f64() }
}

fn cell_setup(cell: &Cell) -> Result<KnownMask> {
    if !cell.family.supports(cell.estimator) {
        return Err(Error::config(format!("{} has no {} estimator", cell.family.name(), cell.estimator)));
    }
    cell.data_family.validate(&cell.data_theta)?;
    KnownMask::from_bindings(cell.family, &cell.known)
}

fn run_cell(cfg: &StudyConfig, cell: &Cell, n: usize, key: u64) -> StudyRow {
    let mut row = StudyRow {
        cell: cell.label(),
        family: cell.family,
        estimator: cell.estimator,
        data_family: cell.data_family,
        n,
        reps: 0,
        rejections: 0,
        rate: 0.0,
        std_error: 0.0,
        failed: 0,
        flagged: true,
        error: None,
    };
    let mask = match cell_setup(cell) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let q = -2.0 * cfg.alpha_level.ln();
    let (rejections, failed) = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, key, r as u64);
            let outcome = cell
                .data_family
                .sample_with(&cell.data_theta, n, &mut rng)
                .and_then(|x| evaluate(cell.family, cell.estimator, &mask, &x));
            match outcome {
                Ok(ev) => (usize::from(ev.tn > q), 0),
                Err(_) => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let ok = cfg.reps - failed;
    row.reps = ok;
    row.rejections = rejections;
    row.failed = failed;
    if ok > 0 {
        row.rate = rejections as f64 / ok as f64;
        row.std_error = (row.rate * (1.0 - row.rate) / ok as f64).sqrt();
    }
    row.flagged = ok == 0 || failed as f64 > MAX_FAILED_FRACTION * cfg.reps as f64;
    row
}

/// CSV with one line per row.
pub fn report_csv(report: &StudyReport) -> String {
    let mut out = String::from("cell,family,estimator,data_family,n,reps,rejections,rate,std_error,failed,flagged,error\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.family.name(),
            r.estimator,
            r.data_family.name(),
            r.n,
            r.reps,
            r.rejections,
            r.rate,
            r.std_error,
            r.failed,
            r.flagged,
            r.error.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    out
}

/// Parses a study description.
///
/// Global keys (before any section): `seed`, `reps`, `alpha`, `n` (comma
/// separated). Each `[cell]` section is a null cell and each `[alternative]`
/// section an alternative cell, with keys `family`, `estimator` (`ml`/`mm`,
/// default `ml`), `theta` (data parameter, required for null cells), `known`
/// (comma-separated `name=value` bindings), and for alternatives
/// `data_family` and `data_theta`. Lines starting with `#` are comments.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    #[derive(Default)]
    struct Section {
        alternative: bool,
        line: usize,
        keys: Vec<(String, String)>,
    }
    let mut globals: Vec<(String, String, usize)> = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let alternative = match line {
                "[cell]" => false,
                "[alternative]" => true,
                _ => return Err(Error::config(format!("line {lineno}: unknown section {line}"))),
            };
            sections.push(Section { alternative, line: lineno, keys: Vec::new() });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {lineno}: expected key = value")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        match sections.last_mut() {
            Some(s) => s.keys.push((k, v)),
            None => globals.push((k, v, lineno)),
        }
    }

    let mut cfg = StudyConfig {
        cells: Vec::new(),
        alternatives: Vec::new(),
        n_grid: Vec::new(),
        reps: 0,
        alpha_level: 0.05,
        seed: 0,
    };
    for (k, v, lineno) in globals {
        let bad = |what: &str| Error::config(format!("line {lineno}: invalid {what} '{v}'"));
        match k.as_str() {
            "seed" => cfg.seed = v.parse().map_err(|_| bad("seed"))?,
            "reps" => cfg.reps = v.parse().map_err(|_| bad("reps"))?,
            "alpha" => cfg.alpha_level = v.parse().map_err(|_| bad("alpha"))?,
            "n" => {
                cfg.n_grid = v.split(',').map(|s| s.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad("n"))?
            }
            _ => return Err(Error::config(format!("line {lineno}: unknown key '{k}'"))),
        }
    }
    for s in sections {
        let get = |key: &str| s.keys.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        for (k, _) in &s.keys {
            if !["family", "estimator", "theta", "known", "data_family", "data_theta"].contains(&k.as_str()) {
                return Err(Error::config(format!("section at line {}: unknown key '{k}'", s.line)));
            }
        }
        let family = parse_family(get("family").ok_or_else(|| Error::config(format!("section at line {}: missing family", s.line)))?)?;
        let estimator = match get("estimator").unwrap_or("ml") {
            "ml" => EstimatorKind::Ml,
            "mm" => EstimatorKind::Mm,
            other => return Err(Error::config(format!("section at line {}: unknown estimator '{other}'", s.line))),
        };
        let known = match get("known") {
            Some(list) => parse_bindings(list)?,
            None => Vec::new(),
        };
        let (data_family, theta_key) = match (s.alternative, get("data_family")) {
            (true, Some(d)) => (parse_family(d)?, "data_theta"),
            (true, None) => return Err(Error::config(format!("section at line {}: missing data_family", s.line))),
            (false, _) => (family, "theta"),
        };
        let data_theta = parse_list(
            get(theta_key).ok_or_else(|| Error::config(format!("section at line {}: missing {theta_key}", s.line)))?,
        )?;
        let cell = Cell { family, estimator, known, data_family, data_theta };
        if s.alternative {
            cfg.alternatives.push(cell);
        } else {
            cfg.cells.push(cell);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Family from its short name (as printed by [`FamilyId::name`]) or an alias.
pub fn parse_family(name: &str) -> Result<FamilyId> {
    name.parse().map_err(|_| Error::config(format!("unknown family '{name}'")))
}

/// Comma-separated numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::config(format!("invalid number '{}'", s.trim()))))
        .collect()
}

/// Comma-separated `name=value` bindings.
pub fn parse_bindings(text: &str) -> Result<Vec<(String, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|b| {
            let (k, v) = b.split_once('=').ok_or_else(|| Error::config(format!("binding '{b}' is not name=value")))?;
            let v = v.trim().parse::<f64>().map_err(|_| Error::config(format!("invalid value in binding '{b}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}
