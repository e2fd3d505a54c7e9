//! Benchmark x optimizer x seed grids.
//!
//! Output layout under the chosen directory:
//!
//! ```text
//! <benchmark>/<optimizer>/seed_<i>.jsonl
//! <benchmark>/<optimizer>/regret.csv
//! <benchmark>/<optimizer>/frequency.csv
//! summary.json
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use cocabo_core::engine::{run, OptimizerKind, Trajectory};
use cocabo_core::metrics::{aggregate_series, compute_regret, selection_frequency, Band};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, GridConfig, ResolvedBenchmark};
use crate::export::{write_frequency_csv, write_regret_csv, FrequencyTable};
use crate::io::{write_trajectory, Header};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "COCABO_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Export(String),
}

/// Seed of one cell: the first eight bytes of a SHA-256 digest over the base
/// seed, benchmark, optimizer and seed index.
pub fn cell_seed(base_seed: u64, benchmark: &str, optimizer: OptimizerKind, seed_index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    for part in [benchmark, optimizer.name()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update(seed_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Worker count from the environment, else the machine's parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub benchmark: String,
    pub optimizer: OptimizerKind,
    pub seed_index: u64,
    pub error: String,
}

/// Aggregate of one benchmark/optimizer pair over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub benchmark: String,
    pub optimizer: OptimizerKind,
    /// Seed indices that completed.
    pub seeds: Vec<u64>,
    pub failed_seeds: Vec<u64>,
    pub mu_star: Option<f64>,
    /// Band of the time-normalised regret at every iteration; absent when
    /// the optimum is unknown.
    pub regret: Option<Vec<Band>>,
    /// Per-seed time-normalised regret at the last iteration, in seed order.
    pub final_regret: Option<Vec<f64>>,
    /// Mean cumulative selection fraction per scope at the last iteration.
    pub final_frequencies: BTreeMap<String, f64>,
    pub mean_wall_time_secs: f64,
}

impl RunSummary {
    pub fn final_band(&self) -> Option<Band> {
        self.regret.as_ref().and_then(|r| r.last().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub summaries: Vec<RunSummary>,
    pub failures: Vec<CellFailure>,
    pub warnings: Vec<String>,
    pub workers: usize,
    pub wall_time_secs: f64,
}

impl GridReport {
    pub fn summary(&self, benchmark: &str, optimizer: OptimizerKind) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.benchmark == benchmark && s.optimizer == optimizer)
    }
}

/// Directory holding one benchmark/optimizer pair's files.
pub fn cell_dir(out: &Path, benchmark: &str, optimizer: OptimizerKind) -> PathBuf {
    out.join(benchmark).join(optimizer.name())
}

pub fn trajectory_path(out: &Path, benchmark: &str, optimizer: OptimizerKind, seed_index: u64) -> PathBuf {
    cell_dir(out, benchmark, optimizer).join(format!("seed_{seed_index}.jsonl"))
}

struct Cell {
    benchmark: usize,
    optimizer: OptimizerKind,
    seed_index: u64,
}

pub fn run_grid(cfg: &GridConfig, out: &Path) -> Result<GridReport, GridError> {
    run_grid_with_progress(cfg, out, &|_| {})
}

/// As [`run_grid`], calling `progress` with a one-line status after each
/// cell. Cells run on up to `workers` threads; each writes only its own
/// trajectory file, and the tables are built afterwards on the calling
/// thread.
pub fn run_grid_with_progress(
    cfg: &GridConfig,
    out: &Path,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<GridReport, GridError> {
    let start = Instant::now();
    cfg.validate()?;
    let benches = cfg.resolve_benchmarks()?;
    let seeds = cfg.seeds.indices();
    let mut warnings = Vec::new();
    for b in benches.iter().filter(|b| b.mu_star.is_none()) {
        warnings.push(format!("benchmark `{}`: no mu_star given, regret is not reported", b.name));
    }
    for b in &benches {
        for &kind in &cfg.optimizers {
            let dir = cell_dir(out, &b.name, kind);
            fs::create_dir_all(&dir).map_err(|source| GridError::Io { path: dir, source })?;
        }
    }

    let mut cells = Vec::new();
    for benchmark in 0..benches.len() {
        for &optimizer in &cfg.optimizers {
            for &seed_index in &seeds {
                cells.push(Cell { benchmark, optimizer, seed_index });
            }
        }
    }
    let workers = cfg.workers.unwrap_or_else(default_workers).clamp(1, cells.len().max(1));
    let results: Vec<Mutex<Option<Result<Trajectory, String>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let b = &benches[cell.benchmark];
                let result = run_cell(cfg, b, cell, out);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                let status = match &result {
                    Ok(tr) => format!("{:.1}s", tr.wall_time_secs.unwrap_or(0.0)),
                    Err(e) => format!("failed: {e}"),
                };
                progress(&format!(
                    "[{n}/{}] {} {} seed {}: {status}",
                    cells.len(),
                    b.name,
                    cell.optimizer,
                    cell.seed_index
                ));
                *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(result);
            });
        }
    });

    let mut outcomes = results
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()).unwrap_or_else(|| Err("not run".into())));
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for b in &benches {
        for &kind in &cfg.optimizers {
            // Cells were queued benchmark-major, then optimizer, then seed.
            let group: Vec<(u64, Result<Trajectory, String>)> =
                seeds.iter().map(|&i| (i, outcomes.next().expect("one outcome per cell"))).collect();
            let summary = summarise(b, kind, group, out, &mut failures)?;
            summaries.push(summary);
        }
    }
    let report = GridReport {
        summaries,
        failures,
        warnings,
        workers,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| GridError::Export(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|source| GridError::Io { path, source })?;
    Ok(report)
}

fn run_cell(cfg: &GridConfig, b: &ResolvedBenchmark, cell: &Cell, out: &Path) -> Result<Trajectory, String> {
    let mut exp = cfg.experiment(b, cell.optimizer);
    exp.seed = cell_seed(cfg.base_seed, &b.name, cell.optimizer, cell.seed_index);
    let t0 = Instant::now();
    let mut tr = match catch_unwind(AssertUnwindSafe(|| run(&exp))) {
        Ok(Ok(tr)) => tr,
        Ok(Err(e)) => return Err(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            return Err(format!("panicked: {msg}"));
        }
    };
    tr.wall_time_secs = Some(t0.elapsed().as_secs_f64());
    let path = trajectory_path(out, &b.name, cell.optimizer, cell.seed_index);
    let header = Header::new(&b.name, cell.seed_index, b.mu_star, &exp, &tr);
    let file = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    write_trajectory(BufWriter::new(file), &header, &tr.records).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(tr)
}

fn summarise(
    b: &ResolvedBenchmark,
    kind: OptimizerKind,
    group: Vec<(u64, Result<Trajectory, String>)>,
    out: &Path,
    failures: &mut Vec<CellFailure>,
) -> Result<RunSummary, GridError> {
    let mut done: Vec<(u64, Trajectory)> = Vec::new();
    let mut failed_seeds = Vec::new();
    for (seed_index, r) in group {
        match r {
            Ok(tr) => done.push((seed_index, tr)),
            Err(error) => {
                failed_seeds.push(seed_index);
                failures.push(CellFailure { benchmark: b.name.clone(), optimizer: kind, seed_index, error });
            }
        }
    }
    done.sort_by_key(|(i, _)| *i);
    let dir = cell_dir(out, &b.name, kind);
    let export = |e: &dyn std::fmt::Display| GridError::Export(format!("{} {kind}: {e}", b.name));
    let create = |name: &str| {
        let path = dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(|source| GridError::Io { path, source })
    };

    let mut summary = RunSummary {
        benchmark: b.name.clone(),
        optimizer: kind,
        seeds: done.iter().map(|(i, _)| *i).collect(),
        failed_seeds,
        mu_star: b.mu_star,
        regret: None,
        final_regret: None,
        final_frequencies: BTreeMap::new(),
        mean_wall_time_secs: 0.0,
    };
    if done.is_empty() {
        return Ok(summary);
    }
    summary.mean_wall_time_secs =
        done.iter().map(|(_, t)| t.wall_time_secs.unwrap_or(0.0)).sum::<f64>() / done.len() as f64;

    if let Some(mu) = b.mu_star {
        let series = done
            .iter()
            .map(|(_, t)| compute_regret(t, mu, b.objective).map(|r| r.normalised))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| export(&e))?;
        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        let bands = aggregate_series(&refs).map_err(|e| export(&e))?;
        write_regret_csv(create("regret.csv")?, &bands).map_err(|e| export(&e))?;
        summary.final_regret = Some(series.iter().filter_map(|s| s.last().copied()).collect());
        summary.regret = Some(bands);
    }

    let freqs = done
        .iter()
        .map(|(_, t)| selection_frequency(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| export(&e))?;
    let table = FrequencyTable::mean_of(&freqs).map_err(|e| export(&e))?;
    write_frequency_csv(create("frequency.csv")?, &table).map_err(|e| export(&e))?;
    if let Some(last) = table.rows.last() {
        summary.final_frequencies = table.scopes.iter().cloned().zip(last.iter().copied()).collect();
    }
    Ok(summary)
}
