//! Expected improvement, probability of improvement and upper confidence
//! bound, and the candidate search that turns them into a policy.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::gp::{GpError, GpModel};
use crate::math::{norm_cdf, norm_pdf};
use crate::scm::DomainSpec;
use crate::Objective;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AcqError {
    #[error("expected {expected} dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain of dimension {0} is empty")]
    EmptyDomain(usize),
    #[error("posterior is not finite")]
    NonFinite,
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionVector {
    pub ei: f64,
    pub pi: f64,
    pub ucb: f64,
}

impl AcquisitionVector {
    /// Acquisitions of a Gaussian prediction `N(mu, sigma^2)` against the
    /// incumbent `best`, all to be maximised.
    pub fn from_posterior(mu: f64, sigma: f64, best: f64, beta: f64) -> AcquisitionVector {
        let ucb = mu + beta * sigma;
        if !(sigma > 0.0) || !best.is_finite() {
            if best == f64::NEG_INFINITY {
                return AcquisitionVector { ei: f64::INFINITY, pi: 1.0, ucb };
            }
            return AcquisitionVector {
                ei: (mu - best).max(0.0),
                pi: if mu > best { 1.0 } else { 0.0 },
                ucb,
            };
        }
        let u = (mu - best) / sigma;
        let pi = norm_cdf(u);
        let ei = ((mu - best) * pi + sigma * norm_pdf(u)).max(0.0);
        AcquisitionVector { ei, pi, ucb }
    }

    /// `true` if `self` is at least as good everywhere and better somewhere.
    pub fn dominates(&self, other: &AcquisitionVector) -> bool {
        self.ei >= other.ei
            && self.pi >= other.pi
            && self.ucb >= other.ucb
            && (self.ei > other.ei || self.pi > other.pi || self.ucb > other.ucb)
    }
}

/// Acquisitions at intervention `x` under context `c`; the model input is
/// `x` followed by `c`.
pub fn evaluate(
    m: &GpModel,
    x: &[f64],
    c: &[f64],
    best_y: f64,
    beta: f64,
) -> Result<AcquisitionVector, AcqError> {
    evaluate_for(m, x, c, best_y, beta, Objective::Maximise)
}

/// As [`evaluate`], for a model whose targets follow `objective`. The result
/// is always in the maximisation convention.
pub fn evaluate_for(
    m: &GpModel,
    x: &[f64],
    c: &[f64],
    best_y: f64,
    beta: f64,
    objective: Objective,
) -> Result<AcquisitionVector, AcqError> {
    if x.len() + c.len() != m.dim() {
        return Err(AcqError::DimensionMismatch { expected: m.dim(), got: x.len() + c.len() });
    }
    let z: Vec<f64> = x.iter().chain(c).copied().collect();
    let (mu, sigma) = m.posterior(&z)?;
    if !mu.is_finite() || !sigma.is_finite() {
        return Err(AcqError::NonFinite);
    }
    let s = objective.sign();
    Ok(AcquisitionVector::from_posterior(s * mu, sigma, s * best_y, beta))
}

/// Index of the best observation under `objective`; `None` for an empty
/// model.
pub fn incumbent(m: &GpModel, objective: Objective) -> Option<usize> {
    let s = objective.sign();
    let mut best: Option<(usize, f64)> = None;
    for (i, o) in m.observations().iter().enumerate() {
        if best.is_none_or(|(_, b)| s * o.y > b) {
            best = Some((i, s * o.y));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestConfig {
    /// Quasi-random candidates per call.
    pub candidates: usize,
    /// Gaussian perturbations of the incumbent per call.
    pub perturbations: usize,
    /// Perturbation scale as a fraction of each domain's width.
    pub perturb_scale: f64,
    pub beta: f64,
}

impl Default for SuggestConfig {
    fn default() -> SuggestConfig {
        SuggestConfig { candidates: 512, perturbations: 32, perturb_scale: 0.05, beta: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    QuasiRandom,
    Perturbation,
}

/// Candidate interventions with their origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBatch {
    pub points: Vec<Vec<f64>>,
    pub generators: Vec<Generator>,
}

/// Scrambled Sobol points over the free dimensions plus perturbations of
/// `anchor`. Dimensions with a `fixed` value keep it.
pub fn candidates<R: Rng + ?Sized>(
    domains: &[DomainSpec],
    fixed: &[Option<f64>],
    anchor: Option<&[f64]>,
    cfg: &SuggestConfig,
    rng: &mut R,
) -> Result<CandidateBatch, AcqError> {
    let nx = domains.len();
    if fixed.len() != nx {
        return Err(AcqError::DimensionMismatch { expected: nx, got: fixed.len() });
    }
    for (k, d) in domains.iter().enumerate() {
        if !d.is_valid() {
            return Err(AcqError::EmptyDomain(k));
        }
    }
    let free: Vec<usize> = (0..nx).filter(|&k| fixed[k].is_none()).collect();
    let seed: u32 = rng.random();
    let base: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut points = Vec::with_capacity(cfg.candidates + cfg.perturbations);
    let mut generators = Vec::with_capacity(points.capacity());
    let mut push = |p: Vec<f64>, g| {
        points.push(p);
        generators.push(g);
    };
    // With nothing free every candidate would be the same point.
    let count = if free.is_empty() { 1 } else { cfg.candidates.max(1) };
    for i in 0..count {
        let mut p = base.clone();
        for (j, &k) in free.iter().enumerate() {
            let u = if j < sobol_burley::NUM_DIMENSIONS as usize {
                sobol_burley::sample(i as u32, j as u32, seed) as f64
            } else {
                rng.random::<f64>()
            };
            let (lo, hi) = domains[k].bounds();
            p[k] = domains[k].clip(lo + u * (hi - lo)).0;
        }
        push(p, Generator::QuasiRandom);
    }
    if let Some(anchor) = anchor.filter(|_| !free.is_empty()) {
        for _ in 0..cfg.perturbations {
            let mut p = base.clone();
            for &k in &free {
                let (lo, hi) = domains[k].bounds();
                let z: f64 = StandardNormal.sample(rng);
                p[k] = domains[k].clip(anchor[k] + cfg.perturb_scale * (hi - lo) * z).0;
            }
            push(p, Generator::Perturbation);
        }
    }
    Ok(CandidateBatch { points, generators })
}

/// Indices of the non-dominated members of `acq`.
pub fn pareto_front(acq: &[AcquisitionVector]) -> Vec<usize> {
    (0..acq.len())
        .filter(|&i| !acq.iter().any(|o| o.dominates(&acq[i])))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub acquisition: AcquisitionVector,
    /// Position of the chosen point in its candidate batch.
    pub index: usize,
    pub front_size: usize,
}

/// Next intervention for context `c`: a uniformly chosen member of the
/// Pareto front of (EI, PI, UCB) over a candidate batch. The model input is
/// the intervention followed by `c`; `fixed` pins intervention dimensions.
pub fn suggest<R: Rng + ?Sized>(
    m: &GpModel,
    c: &[f64],
    domains: &[DomainSpec],
    fixed: &[Option<f64>],
    objective: Objective,
    cfg: &SuggestConfig,
    rng: &mut R,
) -> Result<Suggestion, AcqError> {
    let nx = domains.len();
    if nx + c.len() != m.dim() {
        return Err(AcqError::DimensionMismatch { expected: m.dim(), got: nx + c.len() });
    }
    let best = incumbent(m, objective);
    let anchor = best.map(|i| &m.observations()[i].z[..nx]);
    let batch = candidates(domains, fixed, anchor, cfg, rng)?;
    let Some(best) = best else {
        let acq = AcquisitionVector::from_posterior(0.0, 1.0, f64::NEG_INFINITY, cfg.beta);
        return Ok(Suggestion { x: batch.points[0].clone(), acquisition: acq, index: 0, front_size: 1 });
    };
    let s = objective.sign();
    let best_y = s * m.observations()[best].y;
    let mut z = vec![0.0; m.dim()];
    z[nx..].copy_from_slice(c);
    let mut acq = Vec::with_capacity(batch.points.len());
    for p in &batch.points {
        z[..nx].copy_from_slice(p);
        let (mu, sigma) = m.posterior(&z)?;
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(AcqError::NonFinite);
        }
        acq.push(AcquisitionVector::from_posterior(s * mu, sigma, best_y, cfg.beta));
    }
    let front = pareto_front(&acq);
    let index = front[rng.random_range(0..front.len())];
    Ok(Suggestion {
        x: batch.points[index].clone(),
        acquisition: acq[index],
        index,
        front_size: front.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpHyperparams, InputScaling, Observation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_sigma() {
        let a = AcquisitionVector::from_posterior(3.0, 0.0, 1.0, 2.0);
        assert_eq!(a, AcquisitionVector { ei: 2.0, pi: 1.0, ucb: 3.0 });
        let b = AcquisitionVector::from_posterior(0.0, 0.0, 1.0, 2.0);
        assert_eq!((b.ei, b.pi), (0.0, 0.0));
    }

    #[test]
    fn closed_form_at_the_incumbent() {
        let a = AcquisitionVector::from_posterior(0.7, 1.0, 0.7, 2.0);
        assert!((a.ei - 0.3989422804014327).abs() < 1e-15);
        assert_eq!(a.pi, 0.5);
        let lo = AcquisitionVector::from_posterior(0.7, 1.0, 0.7, 1.0);
        assert!(a.ucb > lo.ucb);
    }

    #[test]
    fn front_filters_dominated() {
        let v = |ei, pi, ucb| AcquisitionVector { ei, pi, ucb };
        let acq = [v(1.0, 0.5, 1.0), v(0.5, 0.4, 0.9), v(0.2, 0.9, 0.1), v(1.0, 0.5, 1.0)];
        assert_eq!(pareto_front(&acq), [0, 2, 3]);
    }

    fn domains(n: usize) -> Vec<DomainSpec> {
        vec![DomainSpec::continuous(0.0, 1.0); n]
    }

    #[test]
    fn cold_start_is_in_domain() {
        let m = GpModel::condition(Vec::new(), InputScaling::identity(2), GpHyperparams::default_for(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = [DomainSpec::continuous(-1.0, 1.0)];
        let s = suggest(&m, &[0.3], &d, &[None], Objective::Maximise, &SuggestConfig::default(), &mut rng).unwrap();
        assert!((-1.0..=1.0).contains(&s.x[0]));
    }

    #[test]
    fn fixed_dimensions_are_held() {
        let obs = vec![Observation { z: vec![0.2, 0.4], y: 1.0 }, Observation { z: vec![0.8, 0.1], y: 0.0 }];
        let m = GpModel::condition(obs, InputScaling::identity(2), GpHyperparams::default_for(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = suggest(&m, &[], &domains(2), &[None, Some(0.25)], Objective::Maximise, &SuggestConfig::default(), &mut rng)
            .unwrap();
        assert_eq!(s.x[1], 0.25);
    }

    #[test]
    fn errors() {
        let m = GpModel::condition(Vec::new(), InputScaling::identity(1), GpHyperparams::default_for(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SuggestConfig::default();
        assert!(matches!(
            suggest(&m, &[1.0], &domains(1), &[None], Objective::Maximise, &cfg, &mut rng),
            Err(AcqError::DimensionMismatch { .. })
        ));
        let empty = [DomainSpec::Discrete { values: Vec::new() }];
        assert_eq!(
            suggest(&m, &[], &empty, &[None], Objective::Maximise, &cfg, &mut rng),
            Err(AcqError::EmptyDomain(0))
        );
    }
}
