//! Structural causal models: a small equation language, sampling under mixed
//! policies and Monte Carlo expectations.

mod builtin;
mod expr;
mod parse;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{CausalGraph, GraphError, VarKind, Variable};
use crate::scope::{MixedPolicyScope, ScopeError};

pub use builtin::{
    builtin, large_system_scm_text, AnalyticPolicy, Benchmark, BUILTIN_NAMES, COBO_FAVORABLE_SCM,
    PSA_HETEROGENEOUS_SCM, PSA_HOMOGENEOUS_OPTIMUM, PSA_HOMOGENEOUS_SCM, TOY_SCM,
};
pub use expr::{sigmoid, BinOp, Expr, Func};
pub use parse::{parse_expr, parse_scm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScmError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}, column {col}: unknown function `{name}`")]
    UnknownFunction { line: usize, col: usize, name: String },
    #[error("line {line}, column {col}: `{name}` is not declared before this line")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("line {line}: `{name}` refers to itself")]
    SelfReference { line: usize, name: String },
    #[error("line {line}: `{name}` is declared twice")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is exogenous and cannot be intervened on or read as a context")]
    NotEndogenous(String),
    #[error("intervened variable `{0}` has no domain")]
    MissingDomain(String),
    #[error("scope makes `{0}` depend on its own consequences")]
    OrderingViolation(String),
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Distribution::Normal { mean, sd } => {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                mean + sd * z
            }
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Distribution::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSpec {
    pub name: String,
    pub distribution: Distribution,
}

/// Admissible values of an intervened variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Continuous { lo: f64, hi: f64 },
    Discrete { values: Vec<f64> },
}

impl DomainSpec {
    pub fn continuous(lo: f64, hi: f64) -> DomainSpec {
        DomainSpec::Continuous { lo, hi }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            DomainSpec::Continuous { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            DomainSpec::Discrete { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            DomainSpec::Continuous { lo, hi } => (*lo, *hi),
            DomainSpec::Discrete { values } => values.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &v| (lo.min(v), hi.max(v)),
            ),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            DomainSpec::Continuous { lo, hi } => *lo <= v && v <= *hi,
            DomainSpec::Discrete { values } => values.contains(&v),
        }
    }

    /// Projects `v` onto the domain; the flag reports whether it moved.
    /// Non-finite input maps to the lower bound.
    pub fn clip(&self, v: f64) -> (f64, bool) {
        let out = match self {
            DomainSpec::Continuous { lo, hi } => {
                if v.is_nan() {
                    *lo
                } else {
                    v.clamp(*lo, *hi)
                }
            }
            DomainSpec::Discrete { values } => {
                let mut best = values[0];
                for &c in &values[1..] {
                    if libm::fabs(c - v) < libm::fabs(best - v) {
                        best = c;
                    }
                }
                best
            }
        };
        (out, out != v)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Exogenous(Distribution),
    Endogenous(Expr),
}

/// A structural causal model. Variables live in slots numbered in
/// declaration order; equations are evaluated in that order under passive
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    names: Vec<String>,
    slots: Vec<Slot>,
    index: BTreeMap<String, usize>,
    domains: BTreeMap<String, DomainSpec>,
    target: usize,
}

impl Scm {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn slot_name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn exogenous(&self) -> Vec<ExogenousSpec> {
        self.slots
            .iter()
            .zip(&self.names)
            .filter_map(|(s, n)| match s {
                Slot::Exogenous(d) => Some(ExogenousSpec { name: n.clone(), distribution: *d }),
                Slot::Endogenous(_) => None,
            })
            .collect()
    }

    /// Endogenous variables in equation order.
    pub fn endogenous(&self) -> Vec<&str> {
        self.slots
            .iter()
            .zip(&self.names)
            .filter(|(s, _)| matches!(s, Slot::Endogenous(_)))
            .map(|(_, n)| n.as_str())
            .collect()
    }

    pub fn equation(&self, name: &str) -> Option<&Expr> {
        match self.slots.get(self.slot(name)?)? {
            Slot::Endogenous(e) => Some(e),
            Slot::Exogenous(_) => None,
        }
    }

    pub fn is_endogenous(&self, name: &str) -> bool {
        self.equation(name).is_some()
    }

    pub fn domains(&self) -> &BTreeMap<String, DomainSpec> {
        &self.domains
    }

    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        self.domains.get(name)
    }

    pub fn target(&self) -> &str {
        &self.names[self.target]
    }

    /// The causal diagram the equations induce: a directed edge for every
    /// endogenous reference and a confounder for every exogenous variable
    /// shared by two equations. Variables with a domain are manipulable.
    pub fn induced_graph(&self) -> Result<CausalGraph, ScmError> {
        let mut vars = Vec::new();
        let mut directed = Vec::new();
        let mut readers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut refs = Vec::new();
        for (slot, name) in self.names.iter().enumerate() {
            let Slot::Endogenous(expr) = &self.slots[slot] else {
                continue;
            };
            let kind = if slot == self.target {
                VarKind::Target
            } else if self.domains.contains_key(name) {
                VarKind::Manipulable
            } else {
                VarKind::Context
            };
            vars.push(Variable { name: name.clone(), kind });
            refs.clear();
            expr.references(&mut refs);
            refs.sort_unstable();
            refs.dedup();
            for &r in &refs {
                match self.slots[r] {
                    Slot::Endogenous(_) => directed.push((self.names[r].clone(), name.clone())),
                    Slot::Exogenous(_) => readers.entry(r).or_default().push(slot),
                }
            }
        }
        let mut bidirected = Vec::new();
        for readers in readers.values() {
            for (i, &a) in readers.iter().enumerate() {
                for &b in &readers[i + 1..] {
                    bidirected.push((self.names[a].clone(), self.names[b].clone()));
                }
            }
        }
        Ok(CausalGraph::new(vars, directed, bidirected)?)
    }

    /// Compiles the evaluation order for `scope`. Interventions replace their
    /// equations and are decided once all of their contexts are realised.
    pub fn plan(&self, scope: &MixedPolicyScope) -> Result<SamplingPlan, ScmError> {
        for (x, contexts) in scope.pairs() {
            for v in core::iter::once(x).chain(contexts.iter().map(String::as_str)) {
                if self.slot(v).is_none() {
                    return Err(ScmError::UnknownVariable(v.to_string()));
                }
                if !self.is_endogenous(v) {
                    return Err(ScmError::NotEndogenous(v.to_string()));
                }
            }
            if !self.domains.contains_key(x) {
                return Err(ScmError::MissingDomain(x.to_string()));
            }
        }
        let n = self.len();
        // Dependencies in the mutilated model, over slots.
        let mut deps: Vec<Vec<usize>> = Vec::with_capacity(n);
        for (slot, s) in self.slots.iter().enumerate() {
            let mut d = Vec::new();
            match (s, scope.contexts_of(&self.names[slot])) {
                (_, Some(ctx)) => d.extend(ctx.iter().map(|c| self.index[c])),
                (Slot::Endogenous(e), None) => {
                    e.references(&mut d);
                    d.retain(|&r| matches!(self.slots[r], Slot::Endogenous(_)));
                }
                (Slot::Exogenous(_), None) => {}
            }
            d.sort_unstable();
            d.dedup();
            deps.push(d);
        }
        // Kahn over slots, smallest slot first so passive sampling follows
        // declaration order.
        let mut indegree: Vec<usize> = deps.iter().map(Vec::len).collect();
        let mut dependants: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (v, d) in deps.iter().enumerate() {
            for &u in d {
                dependants[u].push(v);
            }
        }
        let mut ready: alloc::collections::BinaryHeap<core::cmp::Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(v, _)| core::cmp::Reverse(v))
            .collect();
        let mut steps = Vec::with_capacity(n);
        while let Some(core::cmp::Reverse(v)) = ready.pop() {
            let name = &self.names[v];
            let step = match &self.slots[v] {
                Slot::Exogenous(d) => Step::Draw(v, *d),
                Slot::Endogenous(_) if scope.intervenes_on(name) => {
                    Step::Decide(v, self.domains[name].clone())
                }
                Slot::Endogenous(e) => Step::Eval(v, e.clone()),
            };
            steps.push(step);
            for &w in &dependants[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(core::cmp::Reverse(w));
                }
            }
        }
        if steps.len() < n {
            let stuck = (0..n).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(ScmError::OrderingViolation(self.names[stuck].clone()));
        }
        let intervention = scope.intervened().map(|x| self.index[x]).collect();
        let context = scope.all_contexts().into_iter().map(|c| self.index[c]).collect();
        Ok(SamplingPlan { steps, intervention, context, target: self.target })
    }

    /// One draw of the model under `policy`.
    pub fn sample<P: Policy + ?Sized, R: Rng + ?Sized>(
        &self,
        policy: &mut P,
        rng: &mut R,
    ) -> Result<Record, ScmError> {
        let plan = self.plan(policy.scope())?;
        let mut buf = SampleBuffer::new(self);
        plan.run(self, policy, rng, &mut buf);
        Ok(buf.record(self, &plan))
    }

    /// Monte Carlo mean of the target over `n` independent draws.
    pub fn estimate_expectation<P: Policy + ?Sized, R: Rng + ?Sized>(
        &self,
        policy: &mut P,
        n: usize,
        rng: &mut R,
    ) -> Result<Estimate, ScmError> {
        if n == 0 {
            return Err(ScmError::NoSamples);
        }
        let plan = self.plan(policy.scope())?;
        let mut buf = SampleBuffer::new(self);
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in 0..n {
            plan.run(self, policy, rng, &mut buf);
            let y = buf.values[self.target];
            let delta = y - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (y - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Ok(Estimate { mean, std_error: libm::sqrt(var / n as f64), n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
enum Step {
    Draw(usize, Distribution),
    Eval(usize, Expr),
    Decide(usize, DomainSpec),
}

/// Evaluation order of a model under one scope.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    steps: Vec<Step>,
    intervention: Vec<usize>,
    context: Vec<usize>,
    target: usize,
}

impl SamplingPlan {
    /// Slots in the order they are realised.
    pub fn order(&self) -> Vec<usize> {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Draw(v, _) | Step::Eval(v, _) | Step::Decide(v, _) => *v,
            })
            .collect()
    }

    pub fn run<P: Policy + ?Sized, R: Rng + ?Sized>(
        &self,
        scm: &Scm,
        policy: &mut P,
        rng: &mut R,
        buf: &mut SampleBuffer,
    ) {
        buf.known.iter_mut().for_each(|k| *k = false);
        buf.clipped = false;
        for step in &self.steps {
            let (slot, value) = match step {
                Step::Draw(v, d) => (*v, d.sample(rng)),
                Step::Eval(v, e) => (*v, e.eval(&buf.values, rng)),
                Step::Decide(v, domain) => {
                    let realised = Realised { scm, values: &buf.values, known: &buf.known };
                    let raw = policy.act(&scm.names[*v], &realised);
                    let (value, moved) = domain.clip(raw);
                    buf.clipped |= moved;
                    (*v, value)
                }
            };
            buf.values[slot] = value;
            buf.known[slot] = true;
        }
    }
}

/// Scratch space reused across draws.
#[derive(Debug, Clone)]
pub struct SampleBuffer {
    values: Vec<f64>,
    known: Vec<bool>,
    clipped: bool,
}

impl SampleBuffer {
    pub fn new(scm: &Scm) -> SampleBuffer {
        SampleBuffer {
            values: alloc::vec![0.0; scm.len()],
            known: alloc::vec![false; scm.len()],
            clipped: false,
        }
    }

    pub fn record(&self, scm: &Scm, plan: &SamplingPlan) -> Record {
        let pick = |slots: &[usize]| {
            slots.iter().map(|&s| (scm.names[s].clone(), self.values[s])).collect()
        };
        Record {
            values: scm
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s, Slot::Endogenous(_)))
                .map(|(i, _)| (scm.names[i].clone(), self.values[i]))
                .collect(),
            scope_id: None,
            intervention: pick(&plan.intervention),
            context: pick(&plan.context),
            target_value: self.values[plan.target],
            clipped: self.clipped,
        }
    }
}

/// Values realised so far within one draw.
pub struct Realised<'a> {
    scm: &'a Scm,
    values: &'a [f64],
    known: &'a [bool],
}

impl Realised<'_> {
    /// `None` for variables not yet realised and for exogenous variables.
    pub fn get(&self, name: &str) -> Option<f64> {
        let slot = self.scm.slot(name)?;
        match self.scm.slots[slot] {
            Slot::Endogenous(_) if self.known[slot] => Some(self.values[slot]),
            _ => None,
        }
    }
}

/// Decides intervened values from realised contexts.
pub trait Policy {
    fn scope(&self) -> &MixedPolicyScope;
    /// Value for the intervened variable `var`. Called once per draw per
    /// intervened variable, after all of its contexts are realised.
    fn act(&mut self, var: &str, realised: &Realised<'_>) -> f64;
}

/// Empty-scope policy: pure observation.
#[derive(Debug, Clone, Default)]
pub struct Passive(MixedPolicyScope);

impl Passive {
    pub fn new() -> Passive {
        Passive(MixedPolicyScope::empty())
    }
}

impl Policy for Passive {
    fn scope(&self) -> &MixedPolicyScope {
        &self.0
    }

    fn act(&mut self, _: &str, _: &Realised<'_>) -> f64 {
        0.0
    }
}

/// Policy whose rule for each intervened variable is an expression over its
/// contexts.
#[derive(Debug, Clone)]
pub struct ExprPolicy {
    scope: MixedPolicyScope,
    rules: BTreeMap<String, (Expr, Vec<String>)>,
    scratch: Vec<f64>,
}

impl ExprPolicy {
    /// `rules` maps each intervened variable to its expression source. The
    /// expression may reference only that variable's contexts.
    pub fn new<'a, I>(scope: MixedPolicyScope, rules: I) -> Result<ExprPolicy, ScmError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut compiled = BTreeMap::new();
        let mut width = 0;
        for (x, src) in rules {
            let contexts: Vec<String> = match scope.contexts_of(x) {
                Some(c) => c.iter().cloned().collect(),
                None => return Err(ScmError::UnknownVariable(x.to_string())),
            };
            let expr = parse_expr(src, &contexts)?;
            if expr.is_stochastic() {
                return Err(ScmError::Invalid {
                    line: 1,
                    message: alloc::format!("rule for `{x}` must be deterministic"),
                });
            }
            width = width.max(contexts.len());
            compiled.insert(x.to_string(), (expr, contexts));
        }
        for x in scope.intervened() {
            if !compiled.contains_key(x) {
                return Err(ScmError::Invalid {
                    line: 0,
                    message: alloc::format!("no rule for intervened variable `{x}`"),
                });
            }
        }
        Ok(ExprPolicy { scope, rules: compiled, scratch: alloc::vec![0.0; width] })
    }
}

impl ExprPolicy {
    /// Reads a policy file; see [`crate::scope::parse_policy`].
    pub fn from_text(text: &str) -> Result<ExprPolicy, ScmError> {
        let spec = crate::scope::parse_policy(text)?;
        ExprPolicy::new(spec.scope, spec.rules.iter().map(|(x, r)| (x.as_str(), r.as_str())))
    }
}

impl Policy for ExprPolicy {
    fn scope(&self) -> &MixedPolicyScope {
        &self.scope
    }

    fn act(&mut self, var: &str, realised: &Realised<'_>) -> f64 {
        let (expr, contexts) = &self.rules[var];
        for (i, c) in contexts.iter().enumerate() {
            self.scratch[i] = realised.get(c).unwrap_or(f64::NAN);
        }
        // Rules are deterministic; the generator is never consulted.
        expr.eval(&self.scratch, &mut NoRng)
    }
}

struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        0
    }
    fn next_u64(&mut self) -> u64 {
        0
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0);
    }
}

/// One environment interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub values: BTreeMap<String, f64>,
    pub scope_id: Option<usize>,
    pub intervention: BTreeMap<String, f64>,
    pub context: BTreeMap<String, f64>,
    pub target_value: f64,
    #[serde(default)]
    pub clipped: bool,
}
