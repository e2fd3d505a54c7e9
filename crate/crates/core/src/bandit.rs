//! UCB1 over scopes with running min-max reward normalisation.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BanditError {
    #[error("arm {arm} out of range for {arms} arms")]
    OutOfRange { arm: usize, arms: usize },
    #[error("reward is not finite")]
    NonFinite,
    #[error("a bandit needs at least one arm")]
    NoArms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub reward_sum: f64,
    /// Smallest raw reward seen; `+inf` before the first pull.
    #[serde(serialize_with = "finite_or_none", deserialize_with = "none_as_pos_inf")]
    pub raw_min: f64,
    #[serde(serialize_with = "finite_or_none", deserialize_with = "none_as_neg_inf")]
    pub raw_max: f64,
}

// Text formats such as JSON have no infinities; unpulled arms store `null`.
fn finite_or_none<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    v.is_finite().then_some(*v).serialize(s)
}

fn none_as_pos_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

fn none_as_neg_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl ArmStats {
    fn fresh() -> ArmStats {
        ArmStats { pulls: 0, reward_sum: 0.0, raw_min: f64::INFINITY, raw_max: f64::NEG_INFINITY }
    }

    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    arms: Vec<ArmStats>,
    total_pulls: u64,
    exploration_c: f64,
    /// When set, means and counts cover only the most recent pulls.
    window: Option<usize>,
    recent: VecDeque<(usize, f64)>,
}

impl BanditState {
    pub fn new(arms: usize, exploration_c: f64) -> Result<BanditState, BanditError> {
        if arms == 0 {
            return Err(BanditError::NoArms);
        }
        Ok(BanditState {
            arms: vec![ArmStats::fresh(); arms],
            total_pulls: 0,
            exploration_c,
            window: None,
            recent: VecDeque::new(),
        })
    }

    pub fn with_window(mut self, window: Option<usize>) -> BanditState {
        self.window = window.filter(|w| *w > 0);
        self
    }

    pub fn arms(&self) -> &[ArmStats] {
        &self.arms
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    pub fn exploration_c(&self) -> f64 {
        self.exploration_c
    }

    /// Global extremes of all rewards seen.
    pub fn raw_range(&self) -> Option<(f64, f64)> {
        let lo = self.arms.iter().map(|a| a.raw_min).fold(f64::INFINITY, f64::min);
        let hi = self.arms.iter().map(|a| a.raw_max).fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    /// UCB index of every arm; `None` marks arms without pulls.
    pub fn indices(&self) -> Vec<Option<f64>> {
        let (lo, hi) = self.raw_range().unwrap_or((0.0, 0.0));
        let total = self.arms.iter().map(|a| a.pulls).sum::<u64>().max(1);
        let ln_t = libm::log(total as f64);
        self.arms
            .iter()
            .map(|a| {
                let mean = a.mean()?;
                let norm = if hi > lo { (mean - lo) / (hi - lo) } else { mean };
                Some(norm + self.exploration_c * libm::sqrt(ln_t / a.pulls as f64))
            })
            .collect()
    }

    /// Unpulled arms first, then the largest index; ties go to the lowest
    /// arm.
    pub fn select(&self) -> usize {
        let idx = self.indices();
        if let Some(i) = idx.iter().position(Option::is_none) {
            return i;
        }
        let mut best = 0;
        for (i, v) in idx.iter().enumerate() {
            if v > &idx[best] {
                best = i;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, y: f64) -> Result<(), BanditError> {
        if arm >= self.arms.len() {
            return Err(BanditError::OutOfRange { arm, arms: self.arms.len() });
        }
        if !y.is_finite() {
            return Err(BanditError::NonFinite);
        }
        let a = &mut self.arms[arm];
        a.pulls += 1;
        a.reward_sum += y;
        a.raw_min = a.raw_min.min(y);
        a.raw_max = a.raw_max.max(y);
        self.total_pulls += 1;
        if let Some(w) = self.window {
            self.recent.push_back((arm, y));
            if self.recent.len() > w {
                if let Some((old, v)) = self.recent.pop_front() {
                    self.arms[old].pulls -= 1;
                    self.arms[old].reward_sum -= v;
                    self.total_pulls -= 1;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_bandit_pulls_in_order() {
        let mut b = BanditState::new(3, 2f64.sqrt()).unwrap();
        for expected in 0..3 {
            assert_eq!(b.select(), expected);
            b.update(expected, 0.5).unwrap();
        }
    }

    #[test]
    fn update_statistics() {
        let mut b = BanditState::new(2, 1.0).unwrap();
        b.update(0, 1.0).unwrap();
        assert_eq!((b.arms()[0].pulls, b.arms()[0].mean()), (1, Some(1.0)));
        b.update(0, 0.0).unwrap();
        assert_eq!(b.arms()[0].mean(), Some(0.5));
        assert_eq!(b.raw_range(), Some((0.0, 1.0)));
        assert_eq!(b.total_pulls(), 2);
        assert_eq!(b.update(2, 0.0), Err(BanditError::OutOfRange { arm: 2, arms: 2 }));
        assert_eq!(b.update(0, f64::NAN), Err(BanditError::NonFinite));
        assert_eq!(BanditState::new(0, 1.0).unwrap_err(), BanditError::NoArms);
    }

    fn with_history(pulls: &[(u64, f64)], c: f64) -> BanditState {
        let mut b = BanditState::new(pulls.len(), c).unwrap();
        for (arm, &(n, mean)) in pulls.iter().enumerate() {
            b.arms[arm] = ArmStats { pulls: n, reward_sum: n as f64 * mean, raw_min: 0.0, raw_max: 1.0 };
            b.total_pulls += n;
        }
        b
    }

    #[test]
    fn exploitation_at_equal_counts() {
        assert_eq!(with_history(&[(100, 0.9), (100, 0.1)], 2f64.sqrt()).select(), 0);
    }

    #[test]
    fn exploration_bonus() {
        let b = with_history(&[(1000, 0.6), (2, 0.5)], 1.0);
        let idx = b.indices();
        let bonus = idx[1].unwrap() - 0.5;
        assert!((bonus - 1.858729846110619).abs() < 1e-12);
        assert_eq!(b.select(), 1);
    }

    #[test]
    fn window_forgets() {
        let mut b = BanditState::new(2, 1.0).unwrap().with_window(Some(2));
        for (arm, y) in [(0, 1.0), (1, 0.0), (1, 0.0)] {
            b.update(arm, y).unwrap();
        }
        assert_eq!(b.arms()[0].pulls, 0);
        assert_eq!(b.total_pulls(), 2);
        assert_eq!(b.select(), 0);
    }
}
