//! Trajectory files: JSON lines, a header followed by one record per line.

use std::io::{BufRead, Write};

use cocabo_core::acquisition::SuggestConfig;
use cocabo_core::bandit::BanditState;
use cocabo_core::engine::{BanditConfig, ExperimentConfig, OptimizerKind, RefitSchedule, Trajectory};
use cocabo_core::gp::FitConfig;
use cocabo_core::scm::Record;
use cocabo_core::Objective;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "cocabo-trajectory/1";

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot encode: {0}")]
    Encode(serde_json::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported format `{0}`")]
    Format(String),
    #[error("header announces {expected} records, file has {found}")]
    Length { expected: usize, found: usize },
}

/// Run settings echoed in the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub iterations: usize,
    pub bandit: BanditConfig,
    pub gp: FitConfig,
    pub refit: RefitSchedule,
    pub acquisition: SuggestConfig,
    pub cabo_epsilon: f64,
}

impl From<&ExperimentConfig> for Settings {
    fn from(c: &ExperimentConfig) -> Settings {
        Settings {
            iterations: c.iterations,
            bandit: c.bandit,
            gp: c.fit,
            refit: c.refit,
            acquisition: c.suggest,
            cabo_epsilon: c.cabo_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub benchmark: String,
    pub optimizer: OptimizerKind,
    pub seed_index: u64,
    pub seed: u64,
    pub objective: Objective,
    pub mu_star: Option<f64>,
    /// Canonical scope names; `scope_id` in the records indexes this list.
    pub scopes: Vec<String>,
    pub settings: Settings,
    /// Final bandit state, when the optimiser has one.
    pub bandit: Option<BanditState>,
}

impl Header {
    pub fn new(
        benchmark: &str,
        seed_index: u64,
        mu_star: Option<f64>,
        cfg: &ExperimentConfig,
        tr: &Trajectory,
    ) -> Header {
        Header {
            format: FORMAT.into(),
            benchmark: benchmark.into(),
            optimizer: tr.optimizer,
            seed_index,
            seed: tr.seed,
            objective: tr.objective,
            mu_star,
            scopes: tr.scopes.clone(),
            settings: Settings::from(cfg),
            bandit: tr.bandit.clone(),
        }
    }
}

pub fn write_trajectory<W: Write>(mut w: W, header: &Header, records: &[Record]) -> Result<(), TrajectoryIoError> {
    json_line(&mut w, header)?;
    for r in records {
        json_line(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

fn json_line<W: Write, T: Serialize>(w: &mut W, v: &T) -> Result<(), TrajectoryIoError> {
    serde_json::to_writer(&mut *w, v).map_err(TrajectoryIoError::Encode)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads a file written by [`write_trajectory`]. The header's record count
/// (`settings.iterations`) must match.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<(Header, Trajectory), TrajectoryIoError> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or(TrajectoryIoError::MissingHeader)?;
    let header: Header =
        serde_json::from_str(&first?).map_err(|source| TrajectoryIoError::Json { line: 1, source })?;
    if header.format != FORMAT {
        return Err(TrajectoryIoError::Format(header.format));
    }
    let mut records = Vec::with_capacity(header.settings.iterations);
    for (i, line) in lines {
        let rec: Record =
            serde_json::from_str(&line?).map_err(|source| TrajectoryIoError::Json { line: i + 1, source })?;
        records.push(rec);
    }
    if records.len() != header.settings.iterations {
        return Err(TrajectoryIoError::Length { expected: header.settings.iterations, found: records.len() });
    }
    let tr = Trajectory {
        optimizer: header.optimizer,
        seed: header.seed,
        objective: header.objective,
        scopes: header.scopes.clone(),
        records,
        bandit: header.bandit.clone(),
        wall_time_secs: None,
    };
    Ok((header, tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cocabo_core::engine::run;
    use cocabo_core::scm::builtin;

    fn quick(kind: OptimizerKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_benchmark(&builtin("toy").unwrap(), kind);
        cfg.iterations = 12;
        cfg.seed = 9;
        cfg.fit = FitConfig { restarts: 2, refine: 1, max_iters: 10 };
        cfg.suggest.candidates = 32;
        cfg
    }

    #[test]
    fn round_trip() {
        for kind in OptimizerKind::ALL {
            let cfg = quick(kind);
            let tr = run(&cfg).unwrap();
            let header = Header::new("toy", 3, Some(1.0 / 3.0), &cfg, &tr);
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &header, &tr.records).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert_eq!(text.lines().count(), 13);
            let (h, back) = read_trajectory(buf.as_slice()).unwrap();
            assert_eq!(h, header);
            assert_eq!(back, tr);
            let mut again = Vec::new();
            write_trajectory(&mut again, &h, &back.records).unwrap();
            assert_eq!(again, buf);
        }
    }

    #[test]
    fn truncated_files_are_rejected() {
        let cfg = quick(OptimizerKind::Cobo);
        let tr = run(&cfg).unwrap();
        let header = Header::new("toy", 0, None, &cfg, &tr);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &header, &tr.records[..5]).unwrap();
        assert!(matches!(
            read_trajectory(buf.as_slice()),
            Err(TrajectoryIoError::Length { expected: 12, found: 5 })
        ));
        assert!(matches!(read_trajectory(&b""[..]), Err(TrajectoryIoError::MissingHeader)));
        assert!(matches!(read_trajectory(&b"{}\n"[..]), Err(TrajectoryIoError::Json { line: 1, .. })));
    }
}
