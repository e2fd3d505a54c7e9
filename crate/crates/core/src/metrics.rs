//! Regret and scope-selection series, and their aggregation across seeds.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::Trajectory;
use crate::Objective;

/// Canonical name of the empty scope.
pub const PASSIVE_SCOPE: &str = "{}";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("trajectory is empty")]
    Empty,
    #[error("record {index} names scope {scope_id}, but only {scopes} scopes exist")]
    UnknownScope { index: usize, scope_id: usize, scopes: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    /// `R_t`, signed so that the optimum has zero mean and worse is negative.
    pub immediate: Vec<f64>,
    /// `(1/t) * sum_{i<=t} R_i`, summed left to right.
    pub normalised: Vec<f64>,
}

impl RegretSeries {
    pub fn len(&self) -> usize {
        self.immediate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.immediate.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.normalised.last().copied()
    }
}

pub fn regret_from_targets(ys: &[f64], mu_star: f64, objective: Objective) -> Result<RegretSeries, MetricsError> {
    if ys.is_empty() {
        return Err(MetricsError::Empty);
    }
    let immediate: Vec<f64> = ys.iter().map(|y| objective.sign() * (y - mu_star)).collect();
    let mut sum = 0.0;
    let normalised = immediate
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sum += r;
            sum / (i + 1) as f64
        })
        .collect();
    Ok(RegretSeries { immediate, normalised })
}

pub fn compute_regret(tr: &Trajectory, mu_star: f64, objective: Objective) -> Result<RegretSeries, MetricsError> {
    regret_from_targets(&tr.targets(), mu_star, objective)
}

/// Cumulative selection fraction of each scope after every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFrequencySeries {
    pub scopes: Vec<String>,
    /// `fractions[t][k]`: share of the first `t + 1` records that used scope `k`.
    pub fractions: Vec<Vec<f64>>,
}

impl SelectionFrequencySeries {
    pub fn column(&self, scope: &str) -> Option<Vec<f64>> {
        let k = self.scopes.iter().position(|s| s == scope)?;
        Some(self.fractions.iter().map(|row| row[k]).collect())
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.fractions.last().map(Vec::as_slice)
    }
}

/// Records without a scope (passive draws) count towards the empty scope,
/// which is appended as an extra column when the run had none.
pub fn selection_frequency(tr: &Trajectory) -> Result<SelectionFrequencySeries, MetricsError> {
    let mut scopes = tr.scopes.clone();
    let passive_col = match scopes.iter().position(|s| s == PASSIVE_SCOPE) {
        Some(k) => Some(k),
        None if tr.records.iter().any(|r| r.scope_id.is_none()) => {
            scopes.push(PASSIVE_SCOPE.into());
            Some(scopes.len() - 1)
        }
        None => None,
    };
    let mut counts = vec![0u64; scopes.len()];
    let mut fractions = Vec::with_capacity(tr.records.len());
    for (i, r) in tr.records.iter().enumerate() {
        let k = match (r.scope_id, passive_col) {
            (Some(k), _) if k < tr.scopes.len() => k,
            (None, Some(p)) => p,
            (id, _) => {
                return Err(MetricsError::UnknownScope {
                    index: i,
                    scope_id: id.unwrap_or(usize::MAX),
                    scopes: tr.scopes.len(),
                })
            }
        };
        counts[k] += 1;
        let t = (i + 1) as f64;
        fractions.push(counts.iter().map(|&c| c as f64 / t).collect());
    }
    Ok(SelectionFrequencySeries { scopes, fractions })
}

/// Mean with a 1.96 standard-error band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Values are summed in sorted order so the result does not depend on the
/// order of seeds. The standard deviation uses `n - 1`; one value gives a
/// zero-width band.
pub fn aggregate(values: &[f64]) -> Band {
    let n = values.len();
    if n == 0 {
        return Band { mean: f64::NAN, lo: f64::NAN, hi: f64::NAN };
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    let half = if n > 1 {
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        1.96 * libm::sqrt(var) / libm::sqrt(n as f64)
    } else {
        0.0
    };
    Band { mean, lo: mean - half, hi: mean + half }
}

/// Pointwise [`aggregate`] over equally long series.
pub fn aggregate_series(series: &[&[f64]]) -> Result<Vec<Band>, MetricsError> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    for s in series {
        if s.len() != first.len() {
            return Err(MetricsError::LengthMismatch(first.len(), s.len()));
        }
    }
    let mut column = Vec::with_capacity(series.len());
    Ok((0..first.len())
        .map(|t| {
            column.clear();
            column.extend(series.iter().map(|s| s[t]));
            aggregate(&column)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::OptimizerKind;
    use crate::scm::Record;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;

    fn record(scope_id: Option<usize>, y: f64) -> Record {
        Record {
            values: BTreeMap::new(),
            scope_id,
            intervention: BTreeMap::new(),
            context: BTreeMap::new(),
            target_value: y,
            clipped: false,
        }
    }

    fn trajectory(scopes: &[&str], ids: &[Option<usize>]) -> Trajectory {
        Trajectory {
            optimizer: OptimizerKind::Cocabo,
            seed: 0,
            objective: Objective::Maximise,
            scopes: scopes.iter().map(|s| s.to_string()).collect(),
            records: ids.iter().map(|&id| record(id, 0.0)).collect(),
            bandit: None,
            wall_time_secs: None,
        }
    }

    #[test]
    fn regret_at_the_optimum_is_zero() {
        let r = regret_from_targets(&[1.0 / 3.0, 1.0 / 3.0], 1.0 / 3.0, Objective::Maximise).unwrap();
        assert_eq!(r.normalised, [0.0, 0.0]);
    }

    #[test]
    fn regret_hand_case() {
        let r = regret_from_targets(&[0.0, 1.0 / 3.0], 1.0 / 3.0, Objective::Maximise).unwrap();
        assert_eq!(r.immediate, [-1.0 / 3.0, 0.0]);
        assert!((r.normalised[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((r.normalised[1] + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn minimisation_flips_sign() {
        let r = regret_from_targets(&[6.0], 5.0, Objective::Minimise).unwrap();
        assert_eq!(r.immediate, [-1.0]);
        assert_eq!(regret_from_targets(&[], 0.0, Objective::Maximise), Err(MetricsError::Empty));
    }

    #[test]
    fn frequency_direct_count() {
        let tr = trajectory(&["a", "b"], &[Some(0), Some(1), Some(0), Some(0)]);
        let f = selection_frequency(&tr).unwrap();
        assert_eq!(f.column("a").unwrap(), [1.0, 0.5, 2.0 / 3.0, 0.75]);
        let single = selection_frequency(&trajectory(&["a"], &[Some(0); 5])).unwrap();
        assert!(single.column("a").unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn passive_draws_join_the_empty_scope() {
        let tr = trajectory(&["<X1|>", "{}"], &[None, Some(0), Some(1)]);
        let f = selection_frequency(&tr).unwrap();
        assert_eq!(f.scopes.len(), 2);
        assert_eq!(f.last().unwrap(), [1.0 / 3.0, 2.0 / 3.0]);
        let tr = trajectory(&["<X1|>"], &[None, Some(0)]);
        let f = selection_frequency(&tr).unwrap();
        assert_eq!(f.scopes, ["<X1|>", "{}"]);
        assert_eq!(f.last().unwrap(), [0.5, 0.5]);
        let bad = trajectory(&["a"], &[Some(3)]);
        assert!(matches!(selection_frequency(&bad), Err(MetricsError::UnknownScope { .. })));
    }

    #[test]
    fn band_half_width() {
        let b = aggregate(&[1.0, 2.0, 3.0]);
        assert_eq!(b.mean, 2.0);
        assert!((b.hi - b.mean - 1.96 / libm::sqrt(3.0)).abs() < 1e-15);
        let one = aggregate(&[4.0]);
        assert_eq!((one.lo, one.hi), (4.0, 4.0));
        assert!(aggregate_series(&[&[1.0][..], &[1.0, 2.0][..]]).is_err());
    }
}
