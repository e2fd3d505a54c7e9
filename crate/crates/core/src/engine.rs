//! Optimisation loops: scope bandit with per-scope contextual surrogates,
//! the context-free baseline over intervention sets, and the single global
//! contextual scope.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcqError, AcquisitionVector, SuggestConfig};
use crate::bandit::{BanditError, BanditState};
use crate::fixtures::load_fixture;
use crate::gp::{FitConfig, GpError, GpHyperparams, GpModel, InputScaling, Observation};
use crate::graph::{CausalGraph, VarKind};
use crate::scm::{Benchmark, DomainSpec, Policy, Realised, Record, SampleBuffer, SamplingPlan, Scm, ScmError};
use crate::scope::{
    enumerate_scopes_with, validate_mps, EnumerationOptions, MixedPolicyScope, ScopeError, ScopeOrigin, ScopeSet,
};
use crate::Objective;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Acquisition(#[from] AcqError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scope {0} is not valid for the graph")]
    InvalidScope(String),
    #[error("scope {0} has contexts; the context-free optimiser needs intervention sets")]
    ContextualScope(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Cocabo,
    Cabo,
    Cobo,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Cocabo, OptimizerKind::Cabo, OptimizerKind::Cobo];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Cocabo => "cocabo",
            OptimizerKind::Cabo => "cabo",
            OptimizerKind::Cobo => "cobo",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EngineError::Config(format!("unknown optimizer `{s}`")))
    }
}

/// Where the scope set comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScopeSource {
    Fixture(String),
    Enumerate(EnumerationOptions),
    Explicit(ScopeSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditConfig {
    pub exploration_c: f64,
    /// Sliding window of recent pulls; `None` keeps the full history.
    pub window: Option<usize>,
}

impl Default for BanditConfig {
    fn default() -> BanditConfig {
        BanditConfig { exploration_c: core::f64::consts::SQRT_2, window: None }
    }
}

/// When hyperparameters are refitted: after every observation up to
/// `every_until`, then after every `then_every`-th. The posterior is
/// conditioned on each new observation regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefitSchedule {
    pub every_until: usize,
    pub then_every: usize,
}

impl Default for RefitSchedule {
    fn default() -> RefitSchedule {
        RefitSchedule { every_until: 100, then_every: 5 }
    }
}

impl RefitSchedule {
    pub fn due(&self, n: usize) -> bool {
        n <= self.every_until || n.is_multiple_of(self.then_every.max(1))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: CausalGraph,
    pub scm: Scm,
    /// `None` uses the optimiser's default: required for the scope bandit
    /// and the context-free optimiser, the global contextual scope for the
    /// single-scope optimiser.
    pub scopes: Option<ScopeSource>,
    pub optimizer: OptimizerKind,
    pub iterations: usize,
    pub seed: u64,
    pub objective: Objective,
    pub bandit: BanditConfig,
    pub fit: FitConfig,
    pub refit: RefitSchedule,
    pub suggest: SuggestConfig,
    pub cabo_epsilon: f64,
}

impl ExperimentConfig {
    pub fn new(graph: CausalGraph, scm: Scm, optimizer: OptimizerKind, objective: Objective) -> ExperimentConfig {
        ExperimentConfig {
            graph,
            scm,
            scopes: None,
            optimizer,
            iterations: 300,
            seed: 0,
            objective,
            bandit: BanditConfig::default(),
            fit: FitConfig::default(),
            refit: RefitSchedule::default(),
            suggest: SuggestConfig::default(),
            cabo_epsilon: 0.1,
        }
    }

    /// Configuration for a built-in benchmark with its stored scope sets:
    /// possibly-optimal scopes for the bandit, intervention sets for the
    /// context-free optimiser.
    pub fn for_benchmark(b: &Benchmark, optimizer: OptimizerKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(b.graph.clone(), b.scm.clone(), optimizer, b.objective);
        cfg.scopes = match optimizer {
            OptimizerKind::Cocabo => Some(ScopeSource::Fixture(b.pomps.into())),
            OptimizerKind::Cabo => b.pomis.map(|p| ScopeSource::Fixture(p.into())),
            OptimizerKind::Cobo => None,
        };
        cfg
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.iterations == 0 {
            return Err(EngineError::Config("iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cabo_epsilon) {
            return Err(EngineError::Config("cabo_epsilon must lie in [0, 1]".into()));
        }
        if !(self.bandit.exploration_c > 0.0) {
            return Err(EngineError::Config("exploration_c must be positive".into()));
        }
        if !(self.suggest.beta > 0.0) {
            return Err(EngineError::Config("beta must be positive".into()));
        }
        Ok(())
    }
}

/// The single scope that controls every manipulable variable on every
/// context variable that is not one of its descendants.
pub fn global_scope(g: &CausalGraph) -> Result<MixedPolicyScope, EngineError> {
    let contexts: Vec<usize> = (0..g.len()).filter(|&i| g.kind(i) == VarKind::Context).collect();
    let mut pairs: Vec<(String, Vec<String>)> = Vec::new();
    for x in (0..g.len()).filter(|&i| g.kind(i) == VarKind::Manipulable) {
        let desc = g.descendants(x);
        let cs = contexts.iter().filter(|&&c| !desc[c]).map(|&c| g.name(c).to_string()).collect();
        pairs.push((g.name(x).to_string(), cs));
    }
    let scope = MixedPolicyScope::from_pairs(pairs.iter().map(|(x, c)| (x.as_str(), c.as_slice())));
    if !validate_mps(g, &scope)? {
        return Err(EngineError::InvalidScope(scope.canonical_name()));
    }
    Ok(scope)
}

/// The scope set an experiment runs over.
pub fn resolve_scopes(cfg: &ExperimentConfig) -> Result<ScopeSet, EngineError> {
    let set = match (&cfg.scopes, cfg.optimizer) {
        (Some(ScopeSource::Explicit(s)), OptimizerKind::Cobo) if s.len() != 1 => {
            return Err(EngineError::Config("the single-scope optimizer takes exactly one scope".into()))
        }
        (Some(ScopeSource::Explicit(s)), _) => s.clone(),
        (_, OptimizerKind::Cobo) => ScopeSet::singleton(global_scope(&cfg.graph)?, ScopeOrigin::Enumerated),
        (Some(ScopeSource::Fixture(name)), _) => load_fixture(name)?,
        (Some(ScopeSource::Enumerate(opts)), _) => enumerate_scopes_with(&cfg.graph, *opts),
        (None, k) => return Err(EngineError::Config(format!("optimizer `{k}` needs a scope source"))),
    };
    if set.is_empty() {
        return Err(EngineError::Config("scope set is empty".into()));
    }
    for s in set.iter() {
        if !validate_mps(&cfg.graph, s)? {
            return Err(EngineError::InvalidScope(s.canonical_name()));
        }
        if cfg.optimizer == OptimizerKind::Cabo && !s.is_context_free() {
            return Err(EngineError::ContextualScope(s.canonical_name()));
        }
    }
    Ok(set)
}

/// Sequence of interactions produced by one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub objective: Objective,
    /// Canonical scope names in arm order; `scope_id` indexes this list.
    pub scopes: Vec<String>,
    pub records: Vec<Record>,
    pub bandit: Option<BanditState>,
    /// Filled in by callers that time the run; never serialised.
    #[serde(skip)]
    pub wall_time_secs: Option<f64>,
}

impl Trajectory {
    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.target_value).collect()
    }
}

const ENV_STREAM: u64 = 0;
const EPSILON_STREAM: u64 = 1;
const SCOPE_STREAM: u64 = 16;

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Contextual surrogate policy for one scope. The model input is the
/// intervened variables in name order, then the remaining contexts in name
/// order.
#[derive(Debug, Clone)]
pub struct ScopeOptimizer {
    scope: MixedPolicyScope,
    xs: Vec<String>,
    cs: Vec<String>,
    domains: Vec<DomainSpec>,
    observations: Vec<Observation>,
    model: GpModel,
    scaling: InputScaling,
    hyper: Option<GpHyperparams>,
    rng: ChaCha8Rng,
    fit: FitConfig,
    refit: RefitSchedule,
    suggest: SuggestConfig,
    decided: Vec<Option<f64>>,
    error: Option<EngineError>,
}

impl ScopeOptimizer {
    pub fn new(scope: MixedPolicyScope, scm: &Scm, cfg: &ExperimentConfig, rng: ChaCha8Rng) -> Result<ScopeOptimizer, EngineError> {
        let xs: Vec<String> = scope.intervened().map(String::from).collect();
        let cs: Vec<String> = scope.pure_contexts().into_iter().map(String::from).collect();
        let domains = xs
            .iter()
            .map(|x| scm.domain(x).cloned().ok_or_else(|| ScmError::MissingDomain(x.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let dim = xs.len() + cs.len();
        let scaling = InputScaling::identity(dim);
        let model = GpModel::condition(Vec::new(), scaling.clone(), GpHyperparams::default_for(dim))?;
        Ok(ScopeOptimizer {
            decided: vec![None; xs.len()],
            scope,
            xs,
            cs,
            domains,
            observations: Vec::new(),
            model,
            scaling,
            hyper: None,
            rng,
            fit: cfg.fit,
            refit: cfg.refit,
            suggest: cfg.suggest,
            error: None,
        })
    }

    pub fn interventions(&self) -> &[String] {
        &self.xs
    }

    pub fn contexts(&self) -> &[String] {
        &self.cs
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    /// Forgets decisions of the previous draw.
    pub fn begin_draw(&mut self) {
        self.decided.iter_mut().for_each(|d| *d = None);
    }

    fn impute(&self, j: usize) -> f64 {
        let k = self.xs.len() + j;
        let n = self.observations.len();
        if n == 0 {
            return 0.0;
        }
        self.observations.iter().map(|o| o.z[k]).sum::<f64>() / n as f64
    }

    fn input_scaling(&self) -> InputScaling {
        let nx = self.xs.len();
        let mut lo = Vec::with_capacity(nx + self.cs.len());
        let mut hi = Vec::with_capacity(nx + self.cs.len());
        for d in &self.domains {
            let (a, b) = d.bounds();
            lo.push(a);
            hi.push(b);
        }
        for j in 0..self.cs.len() {
            let (a, b) = self
                .observations
                .iter()
                .map(|o| o.z[nx + j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if a <= b {
                lo.push(a);
                hi.push(b);
            } else {
                lo.push(0.0);
                hi.push(1.0);
            }
        }
        InputScaling { lo, hi }
    }

    /// Adds one observation (target already in the maximisation convention)
    /// and updates the surrogate.
    pub fn observe(&mut self, record: &Record, reward: f64) -> Result<(), EngineError> {
        let mut z = Vec::with_capacity(self.xs.len() + self.cs.len());
        for x in &self.xs {
            z.push(record.intervention[x]);
        }
        for c in &self.cs {
            z.push(record.context[c]);
        }
        self.observations.push(Observation { z, y: reward });
        let n = self.observations.len();
        if self.hyper.is_none() || self.refit.due(n) {
            self.scaling = self.input_scaling();
            self.model = GpModel::fit(
                self.observations.clone(),
                self.scaling.clone(),
                &self.fit,
                self.hyper.as_ref(),
                &mut self.rng,
            )?;
            self.hyper = Some(self.model.hyperparams().clone());
        } else if let Some(h) = &self.hyper {
            self.model = GpModel::condition(self.observations.clone(), self.scaling.clone(), h.clone())?;
        }
        Ok(())
    }

    fn take_error(&mut self) -> Result<(), EngineError> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl Policy for ScopeOptimizer {
    fn scope(&self) -> &MixedPolicyScope {
        &self.scope
    }

    /// Suggests jointly for all undecided interventions given the contexts
    /// realised so far; contexts not yet realised take their data mean.
    /// Every intervention whose own contexts are realised is committed, so
    /// later calls in the same draw only fill in the rest.
    fn act(&mut self, var: &str, realised: &Realised<'_>) -> f64 {
        let Some(k) = self.xs.iter().position(|x| x == var) else {
            return f64::NAN;
        };
        if let Some(v) = self.decided[k] {
            return v;
        }
        let c: Vec<f64> = (0..self.cs.len())
            .map(|j| realised.get(&self.cs[j]).unwrap_or_else(|| self.impute(j)))
            .collect();
        let fixed = self.decided.clone();
        let s = acquisition::suggest(
            &self.model,
            &c,
            &self.domains,
            &fixed,
            Objective::Maximise,
            &self.suggest,
            &mut self.rng,
        );
        match s {
            Ok(s) => {
                for (k2, x) in self.xs.iter().enumerate() {
                    if self.decided[k2].is_some() {
                        continue;
                    }
                    let ready = self
                        .scope
                        .contexts_of(x)
                        .is_some_and(|cx| cx.iter().all(|n| realised.get(n).is_some()));
                    if k2 == k || ready {
                        self.decided[k2] = Some(s.x[k2]);
                    }
                }
            }
            Err(e) => {
                self.error.get_or_insert(e.into());
                self.decided[k] = Some(self.domains[k].bounds().0);
            }
        }
        self.decided[k].unwrap_or(f64::NAN)
    }
}

/// Sets fixed values for every intervened variable.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    scope: MixedPolicyScope,
    values: BTreeMap<String, f64>,
}

impl FixedPolicy {
    pub fn new(scope: MixedPolicyScope, values: BTreeMap<String, f64>) -> FixedPolicy {
        FixedPolicy { scope, values }
    }
}

impl Policy for FixedPolicy {
    fn scope(&self) -> &MixedPolicyScope {
        &self.scope
    }

    fn act(&mut self, var: &str, _: &Realised<'_>) -> f64 {
        self.values.get(var).copied().unwrap_or(f64::NAN)
    }
}

fn plans(scm: &Scm, scopes: &ScopeSet) -> Result<Vec<SamplingPlan>, EngineError> {
    Ok(scopes.iter().map(|s| scm.plan(s)).collect::<Result<Vec<_>, _>>()?)
}

/// Bandit over scopes, each with its own contextual surrogate.
pub fn run_cocabo(cfg: &ExperimentConfig) -> Result<Trajectory, EngineError> {
    if cfg.optimizer != OptimizerKind::Cocabo {
        return Err(EngineError::Config("expected the cocabo optimizer".into()));
    }
    run_scoped(cfg, true)
}

/// One fixed scope, by default the global contextual scope.
pub fn run_cobo(cfg: &ExperimentConfig) -> Result<Trajectory, EngineError> {
    if cfg.optimizer != OptimizerKind::Cobo {
        return Err(EngineError::Config("expected the cobo optimizer".into()));
    }
    run_scoped(cfg, false)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Trajectory, EngineError> {
    match cfg.optimizer {
        OptimizerKind::Cocabo => run_cocabo(cfg),
        OptimizerKind::Cabo => run_cabo(cfg),
        OptimizerKind::Cobo => run_cobo(cfg),
    }
}

fn run_scoped(cfg: &ExperimentConfig, use_bandit: bool) -> Result<Trajectory, EngineError> {
    cfg.validate()?;
    let scopes = resolve_scopes(cfg)?;
    let plans = plans(&cfg.scm, &scopes)?;
    let mut opts = scopes
        .iter()
        .enumerate()
        .map(|(i, s)| ScopeOptimizer::new(s.clone(), &cfg.scm, cfg, stream(cfg.seed, SCOPE_STREAM + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bandit = BanditState::new(scopes.len(), cfg.bandit.exploration_c)?.with_window(cfg.bandit.window);
    let mut env = stream(cfg.seed, ENV_STREAM);
    let mut buf = SampleBuffer::new(&cfg.scm);
    let sign = cfg.objective.sign();
    let mut records = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let arm = if use_bandit { bandit.select() } else { 0 };
        let opt = &mut opts[arm];
        opt.begin_draw();
        plans[arm].run(&cfg.scm, opt, &mut env, &mut buf);
        opt.take_error()?;
        let mut rec = buf.record(&cfg.scm, &plans[arm]);
        rec.scope_id = Some(arm);
        let reward = sign * rec.target_value;
        bandit.update(arm, reward)?;
        opt.observe(&rec, reward)?;
        records.push(rec);
    }
    Ok(Trajectory {
        optimizer: cfg.optimizer,
        seed: cfg.seed,
        objective: cfg.objective,
        scopes: scopes.canonical_names(),
        records,
        bandit: use_bandit.then_some(bandit),
        wall_time_secs: None,
    })
}

struct CaboArm {
    scope: MixedPolicyScope,
    xs: Vec<String>,
    domains: Vec<DomainSpec>,
    observations: Vec<Observation>,
    model: GpModel,
    hyper: Option<GpHyperparams>,
    rng: ChaCha8Rng,
}

impl CaboArm {
    /// Candidate with the largest expected improvement; an arm without data
    /// scores infinitely.
    fn best_candidate(&mut self, cfg: &SuggestConfig) -> Result<(Vec<f64>, f64), EngineError> {
        let fixed = vec![None; self.xs.len()];
        let best = acquisition::incumbent(&self.model, Objective::Maximise);
        let anchor = best.map(|i| self.model.observations()[i].z.clone());
        let batch = acquisition::candidates(&self.domains, &fixed, anchor.as_deref(), cfg, &mut self.rng)?;
        let Some(best) = best else {
            return Ok((batch.points[0].clone(), f64::INFINITY));
        };
        let best_y = self.model.observations()[best].y;
        let mut top = (0, f64::NEG_INFINITY);
        for (i, p) in batch.points.iter().enumerate() {
            let (mu, sigma) = self.model.posterior(p)?;
            let ei = AcquisitionVector::from_posterior(mu, sigma, best_y, cfg.beta).ei;
            if ei > top.1 {
                top = (i, ei);
            }
        }
        Ok((batch.points[top.0].clone(), top.1))
    }

    fn observe(&mut self, record: &Record, reward: f64, cfg: &ExperimentConfig) -> Result<(), EngineError> {
        let z: Vec<f64> = self.xs.iter().map(|x| record.intervention[x]).collect();
        self.observations.push(Observation { z, y: reward });
        let scaling = InputScaling {
            lo: self.domains.iter().map(|d| d.bounds().0).collect(),
            hi: self.domains.iter().map(|d| d.bounds().1).collect(),
        };
        let n = self.observations.len();
        self.model = match &self.hyper {
            Some(h) if !cfg.refit.due(n) => GpModel::condition(self.observations.clone(), scaling, h.clone())?,
            warm => GpModel::fit(self.observations.clone(), scaling, &cfg.fit, warm.as_ref(), &mut self.rng)?,
        };
        self.hyper = Some(self.model.hyperparams().clone());
        Ok(())
    }
}

/// Context-free baseline: one surrogate per intervention set, compared by
/// expected improvement, with occasional passive observation. Passive
/// records carry no scope and train no surrogate.
pub fn run_cabo(cfg: &ExperimentConfig) -> Result<Trajectory, EngineError> {
    if cfg.optimizer != OptimizerKind::Cabo {
        return Err(EngineError::Config("expected the cabo optimizer".into()));
    }
    cfg.validate()?;
    let scopes = resolve_scopes(cfg)?;
    let plans = plans(&cfg.scm, &scopes)?;
    let passive = cfg.scm.plan(&MixedPolicyScope::empty())?;
    let mut arms = Vec::with_capacity(scopes.len());
    for (i, s) in scopes.iter().enumerate() {
        let xs: Vec<String> = s.intervened().map(String::from).collect();
        let domains = xs
            .iter()
            .map(|x| cfg.scm.domain(x).cloned().ok_or_else(|| ScmError::MissingDomain(x.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let d = xs.len();
        arms.push(CaboArm {
            scope: s.clone(),
            xs,
            domains,
            observations: Vec::new(),
            model: GpModel::condition(Vec::new(), InputScaling::identity(d), GpHyperparams::default_for(d))?,
            hyper: None,
            rng: stream(cfg.seed, SCOPE_STREAM + i as u64),
        });
    }
    let mut env = stream(cfg.seed, ENV_STREAM);
    let mut coin = stream(cfg.seed, EPSILON_STREAM);
    let mut buf = SampleBuffer::new(&cfg.scm);
    let sign = cfg.objective.sign();
    let mut records = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        if coin.random::<f64>() < cfg.cabo_epsilon {
            passive.run(&cfg.scm, &mut crate::scm::Passive::new(), &mut env, &mut buf);
            records.push(buf.record(&cfg.scm, &passive));
            continue;
        }
        let mut choice: Option<(usize, Vec<f64>, f64)> = None;
        for (i, arm) in arms.iter_mut().enumerate() {
            let (x, ei) = arm.best_candidate(&cfg.suggest)?;
            if choice.as_ref().is_none_or(|c| ei > c.2) {
                choice = Some((i, x, ei));
            }
        }
        let Some((i, x, _)) = choice else {
            return Err(EngineError::Config("scope set is empty".into()));
        };
        let arm = &mut arms[i];
        let values = arm.xs.iter().cloned().zip(x).collect();
        let mut policy = FixedPolicy::new(arm.scope.clone(), values);
        plans[i].run(&cfg.scm, &mut policy, &mut env, &mut buf);
        let mut rec = buf.record(&cfg.scm, &plans[i]);
        rec.scope_id = Some(i);
        arm.observe(&rec, sign * rec.target_value, cfg)?;
        records.push(rec);
    }
    Ok(Trajectory {
        optimizer: cfg.optimizer,
        seed: cfg.seed,
        objective: cfg.objective,
        scopes: scopes.canonical_names(),
        records,
        bandit: None,
        wall_time_secs: None,
    })
}

#[cfg(test)]
mod tests;
