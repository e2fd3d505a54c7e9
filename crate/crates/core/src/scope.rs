//! Mixed policy scopes: which variables are controlled, and which observed
//! variables each control may read.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{check_identifier, CausalGraph, GraphError, Surgery, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("scope {0} appears more than once")]
    Duplicate(String),
    #[error("`{0}` is intervened on twice in one scope")]
    RepeatedIntervention(String),
}

/// One `<X | C_X>` entry of a scope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScopePair {
    pub intervened: String,
    pub contexts: BTreeSet<String>,
}

/// A set of `<X | C_X>` pairs keyed by the intervened variable, so pairs and
/// contexts are always in canonical (sorted) order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MixedPolicyScope {
    pairs: BTreeMap<String, BTreeSet<String>>,
}

impl MixedPolicyScope {
    /// Passive observation.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a scope from `(X, contexts)` pairs. A repeated `X` keeps the
    /// last context list; use [`MixedPolicyScope::try_from_pairs`] to reject it.
    pub fn from_pairs<'a, X, C, I>(pairs: I) -> Self
    where
        X: AsRef<str>,
        C: AsRef<str> + 'a,
        I: IntoIterator<Item = (X, &'a [C])>,
    {
        let mut scope = Self::empty();
        for (x, ctx) in pairs {
            scope.pairs.insert(
                x.as_ref().to_string(),
                ctx.iter().map(|c| c.as_ref().to_string()).collect(),
            );
        }
        scope
    }

    pub fn try_from_pairs<I>(pairs: I) -> Result<Self, ScopeError>
    where
        I: IntoIterator<Item = ScopePair>,
    {
        let mut scope = Self::empty();
        for p in pairs {
            if scope.pairs.contains_key(&p.intervened) {
                return Err(ScopeError::RepeatedIntervention(p.intervened));
            }
            scope.pairs.insert(p.intervened, p.contexts);
        }
        Ok(scope)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(X, C_X)` in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> + '_ {
        self.pairs.iter().map(|(x, c)| (x.as_str(), c))
    }

    pub fn pair_list(&self) -> Vec<ScopePair> {
        self.pairs
            .iter()
            .map(|(x, c)| ScopePair {
                intervened: x.clone(),
                contexts: c.clone(),
            })
            .collect()
    }

    pub fn contexts_of(&self, x: &str) -> Option<&BTreeSet<String>> {
        self.pairs.get(x)
    }

    pub fn intervenes_on(&self, x: &str) -> bool {
        self.pairs.contains_key(x)
    }

    /// X(S), sorted.
    pub fn intervened(&self) -> impl Iterator<Item = &str> + '_ {
        self.pairs.keys().map(String::as_str)
    }

    /// C(S): union of all context sets, sorted.
    pub fn all_contexts(&self) -> BTreeSet<&str> {
        self.pairs
            .values()
            .flat_map(|c| c.iter().map(String::as_str))
            .collect()
    }

    /// C(S) minus X(S): the observed inputs that are not already interventions.
    pub fn pure_contexts(&self) -> Vec<&str> {
        self.all_contexts()
            .into_iter()
            .filter(|c| !self.pairs.contains_key(*c))
            .collect()
    }

    /// True when no pair reads a context.
    pub fn is_context_free(&self) -> bool {
        self.pairs.values().all(BTreeSet::is_empty)
    }

    /// Canonical name, e.g. `<X1|C1,C6><X2|C1>`; the empty scope is `{}`.
    pub fn canonical_name(&self) -> String {
        if self.is_empty() {
            return "{}".to_string();
        }
        let mut out = String::new();
        for (x, ctx) in &self.pairs {
            out.push('<');
            out.push_str(x);
            out.push('|');
            let joined: Vec<&str> = ctx.iter().map(String::as_str).collect();
            out.push_str(&joined.join(","));
            out.push('>');
        }
        out
    }

    /// Block form used by scope files.
    pub fn to_text(&self) -> String {
        if self.is_empty() {
            return "passive\n".to_string();
        }
        let mut out = String::new();
        for (x, ctx) in &self.pairs {
            let joined: Vec<&str> = ctx.iter().map(String::as_str).collect();
            if joined.is_empty() {
                out.push_str(&format!("pair {x} |\n"));
            } else {
                out.push_str(&format!("pair {x} | {}\n", joined.join(",")));
            }
        }
        out
    }
}

impl fmt::Display for MixedPolicyScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeOrigin {
    Enumerated,
    Fixture,
    User,
}

/// Ordered, duplicate-free collection of scopes. Order is canonical-name
/// order and doubles as the bandit arm order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeSet {
    scopes: Vec<MixedPolicyScope>,
    origin: ScopeOrigin,
}

impl ScopeSet {
    pub fn new(
        scopes: impl IntoIterator<Item = MixedPolicyScope>,
        origin: ScopeOrigin,
    ) -> Result<Self, ScopeError> {
        let mut keyed: Vec<(String, MixedPolicyScope)> = scopes
            .into_iter()
            .map(|s| (s.canonical_name(), s))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        for w in keyed.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ScopeError::Duplicate(w[0].0.clone()));
            }
        }
        Ok(ScopeSet {
            scopes: keyed.into_iter().map(|(_, s)| s).collect(),
            origin,
        })
    }

    /// Single-scope set, for fixed-scope optimisers.
    pub fn singleton(scope: MixedPolicyScope, origin: ScopeOrigin) -> Self {
        ScopeSet {
            scopes: vec![scope],
            origin,
        }
    }

    pub fn scopes(&self) -> &[MixedPolicyScope] {
        &self.scopes
    }

    pub fn origin(&self) -> ScopeOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.scopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scopes.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&MixedPolicyScope> {
        self.scopes.get(i)
    }

    pub fn position(&self, scope: &MixedPolicyScope) -> Option<usize> {
        self.scopes.iter().position(|s| s == scope)
    }

    pub fn contains(&self, scope: &MixedPolicyScope) -> bool {
        self.position(scope).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MixedPolicyScope> + '_ {
        self.scopes.iter()
    }

    pub fn canonical_names(&self) -> Vec<String> {
        self.scopes.iter().map(MixedPolicyScope::canonical_name).collect()
    }

    /// Scope file text: one block per scope, blocks separated by blank lines.
    pub fn to_text(&self) -> String {
        let blocks: Vec<String> = self.scopes.iter().map(MixedPolicyScope::to_text).collect();
        blocks.join("\n")
    }
}

/// A pair line split into its parts; `rule` is whatever follows `=`.
pub(crate) struct PairLine<'a> {
    pub pair: ScopePair,
    pub rule: Option<&'a str>,
}

/// Parses `pair <X> | <C1>,<C2>` (optionally followed by `= <rule>`).
pub(crate) fn parse_pair_line(line: &str, lineno: usize) -> Result<PairLine<'_>, ScopeError> {
    let syntax = |message: String| ScopeError::Syntax {
        line: lineno,
        message,
    };
    let rest = line
        .strip_prefix("pair")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| syntax(format!("expected `pair`, found `{line}`")))?;
    let (body, rule) = match rest.split_once('=') {
        Some((body, rule)) => (body, Some(rule.trim())),
        None => (rest, None),
    };
    let (x, ctx) = body
        .split_once('|')
        .ok_or_else(|| syntax("missing `|` in pair".to_string()))?;
    let x = x.trim();
    check_identifier(x).map_err(syntax)?;
    let mut contexts = BTreeSet::new();
    let ctx = ctx.trim();
    if !ctx.is_empty() {
        for c in ctx.split(',') {
            let c = c.trim();
            check_identifier(c).map_err(syntax)?;
            if !contexts.insert(c.to_string()) {
                return Err(syntax(format!("context `{c}` listed twice")));
            }
        }
    }
    Ok(PairLine {
        pair: ScopePair {
            intervened: x.to_string(),
            contexts,
        },
        rule,
    })
}

/// Splits text into blank-line separated blocks of `(line number, line)`,
/// with comments stripped.
pub(crate) fn blocks(text: &str) -> Vec<Vec<(usize, &str)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            // A comment-only line does not end a block.
            if raw.trim().is_empty() && !current.is_empty() {
                out.push(core::mem::take(&mut current));
            }
            continue;
        }
        current.push((i + 1, line));
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Parses a scope file. Each block is either the single line `passive` or a
/// list of `pair` lines.
pub fn parse_scopes(text: &str) -> Result<Vec<MixedPolicyScope>, ScopeError> {
    let mut scopes = Vec::new();
    for block in blocks(text) {
        if let [(_, "passive")] = block.as_slice() {
            scopes.push(MixedPolicyScope::empty());
            continue;
        }
        let mut pairs = Vec::with_capacity(block.len());
        for (lineno, line) in block {
            let parsed = parse_pair_line(line, lineno)?;
            if parsed.rule.is_some() {
                return Err(ScopeError::Syntax {
                    line: lineno,
                    message: "policy rules are not allowed in a scope file".to_string(),
                });
            }
            pairs.push(parsed.pair);
        }
        scopes.push(MixedPolicyScope::try_from_pairs(pairs)?);
    }
    Ok(scopes)
}

/// A scope with a deterministic rule per intervened variable, as read from a
/// policy file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub scope: MixedPolicyScope,
    /// `(X, rule source)` in name order.
    pub rules: Vec<(String, String)>,
}

/// Parses a policy file: a single block of `pair X | C1,C2 = <expr>` lines,
/// or the line `passive`.
pub fn parse_policy(text: &str) -> Result<PolicySpec, ScopeError> {
    let mut found = blocks(text);
    if found.len() != 1 {
        return Err(ScopeError::Syntax {
            line: found.get(1).map_or(1, |b| b[0].0),
            message: format!("expected one policy block, found {}", found.len()),
        });
    }
    let block = found.remove(0);
    if let [(_, "passive")] = block.as_slice() {
        return Ok(PolicySpec { scope: MixedPolicyScope::empty(), rules: Vec::new() });
    }
    let mut pairs = Vec::with_capacity(block.len());
    let mut rules = Vec::with_capacity(block.len());
    for (lineno, line) in block {
        let parsed = parse_pair_line(line, lineno)?;
        let rule = parsed.rule.filter(|r| !r.is_empty()).ok_or_else(|| ScopeError::Syntax {
            line: lineno,
            message: format!("missing `= <rule>` for `{}`", parsed.pair.intervened),
        })?;
        rules.push((parsed.pair.intervened.clone(), rule.to_string()));
        pairs.push(parsed.pair);
    }
    rules.sort();
    Ok(PolicySpec { scope: MixedPolicyScope::try_from_pairs(pairs)?, rules })
}

/// Checks the definition of a mixed policy scope against `g`: every
/// intervened variable is manipulable, no pair reads the target or its own
/// intervened variable, and the mutilated graph is acyclic.
pub fn validate_mps(g: &CausalGraph, s: &MixedPolicyScope) -> Result<bool, ScopeError> {
    let surgery = Surgery::new(g, s)?;
    for (x, ctx) in s.pairs() {
        if g.kind_of(x) != Some(VarKind::Manipulable) {
            return Ok(false);
        }
        for c in ctx {
            if c == x || c == g.target() {
                return Ok(false);
            }
        }
    }
    Ok(surgery.is_acyclic())
}

/// `s` subsumes `s2` when it intervenes on at least the variables of `s2`,
/// each with at least the same contexts.
pub fn subsumes(s: &MixedPolicyScope, s2: &MixedPolicyScope) -> bool {
    s2.pairs().all(|(x, ctx2)| match s.contexts_of(x) {
        Some(ctx) => ctx2.is_subset(ctx),
        None => false,
    })
}

/// Index-level scope: `(X, sorted contexts)` sorted by `X`.
type IndexScope = Vec<(usize, Vec<usize>)>;

fn to_scope(g: &CausalGraph, s: &IndexScope) -> MixedPolicyScope {
    let mut scope = MixedPolicyScope::empty();
    for (x, ctx) in s {
        scope.pairs.insert(
            g.name(*x).to_string(),
            ctx.iter().map(|&c| g.name(c).to_string()).collect(),
        );
    }
    scope
}

fn to_index_scope(g: &CausalGraph, s: &MixedPolicyScope) -> Result<IndexScope, GraphError> {
    let mut out = Vec::with_capacity(s.len());
    for (x, ctx) in s.pairs() {
        let mut c: Vec<usize> = ctx.iter().map(|c| g.require(c)).collect::<Result<_, _>>()?;
        c.sort_unstable();
        out.push((g.require(x)?, c));
    }
    out.sort_unstable();
    Ok(out)
}

/// Drops pairs whose intervened variable cannot reach the target in the
/// mutilated graph, and context variables that are irrelevant: a context `C`
/// of `X` is kept when, ignoring the edge `C -> X`, it is (or reaches, or is
/// confounded with an ancestor of) the target or some intervened variable.
/// Repeats until nothing changes.
pub fn prune_redundant(
    g: &CausalGraph,
    s: &MixedPolicyScope,
) -> Result<MixedPolicyScope, ScopeError> {
    let idx = to_index_scope(g, s)?;
    Ok(to_scope(g, &prune_indices(g, idx)))
}

fn surgery_of<'g>(g: &'g CausalGraph, s: &IndexScope) -> Surgery<'g> {
    Surgery::from_indices(g, s)
}

fn prune_indices(g: &CausalGraph, mut s: IndexScope) -> IndexScope {
    let target = g.target_index();
    loop {
        let surgery = surgery_of(g, &s);
        let reaches_target = surgery.ancestors_of(&[target]);
        let kept: IndexScope = s
            .iter()
            .filter(|(x, _)| reaches_target[*x])
            .cloned()
            .collect();
        if kept.len() != s.len() {
            if !surgery_of(g, &kept).is_acyclic() {
                return s;
            }
            s = kept;
            continue;
        }

        let mut next = s.clone();
        let changed = retain_relevant_contexts(g, &surgery, &mut next);
        if !changed || !surgery_of(g, &next).is_acyclic() {
            return s;
        }
        s = next;
    }
}

/// One pass of context pruning against the mutilated graph of `s` (given
/// as `surgery`). Returns whether anything was dropped.
fn retain_relevant_contexts(g: &CausalGraph, surgery: &Surgery<'_>, s: &mut IndexScope) -> bool {
    let mut sinks: Vec<usize> = s.iter().map(|(x, _)| *x).collect();
    sinks.push(g.target_index());
    let relevant_ancestors = surgery.ancestors_of(&sinks);
    let mut changed = false;
    for (x, ctx) in s.iter_mut() {
        let before = ctx.len();
        ctx.retain(|&c| {
            sinks.contains(&c)
                || surgery
                    .children_except(c, *x)
                    .any(|child| relevant_ancestors[child])
                || g.spouses(c)
                    .iter()
                    .any(|&sp| !surgery.is_intervened(sp) && relevant_ancestors[sp])
        });
        changed |= ctx.len() != before;
    }
    changed
}

/// Limits for [`enumerate_scopes_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumerationOptions {
    /// Maximum number of contexts per pair.
    pub max_context: usize,
    /// Maximum number of pairs per scope; `None` means no limit.
    pub max_pairs: Option<usize>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            max_context: 2,
            max_pairs: None,
        }
    }
}

/// Every valid scope over the manipulable variables whose pairs read at most
/// `max_context` observed non-target variables, after redundancy pruning.
/// This is a superset of the possibly-optimal scopes: it may contain scopes
/// that are never optimal, which only costs samples.
pub fn enumerate_scopes(g: &CausalGraph, max_context: usize) -> ScopeSet {
    enumerate_scopes_with(
        g,
        EnumerationOptions {
            max_context,
            max_pairs: None,
        },
    )
}

pub fn enumerate_scopes_with(g: &CausalGraph, opts: EnumerationOptions) -> ScopeSet {
    let manipulable: Vec<usize> = (0..g.len())
        .filter(|&i| g.kind(i) == VarKind::Manipulable)
        .collect();
    let observed: Vec<usize> = (0..g.len()).filter(|&i| i != g.target_index()).collect();
    let max_pairs = opts.max_pairs.unwrap_or(usize::MAX).min(manipulable.len());

    let mut found: BTreeSet<IndexScope> = BTreeSet::new();
    found.insert(Vec::new());
    for k in 1..=max_pairs {
        for subset in Combinations::new(manipulable.len(), k) {
            let intervened: Vec<usize> = subset.iter().map(|&i| manipulable[i]).collect();
            // Descendants of X once the other interventions are cut; reading
            // any of them as a context closes a cycle.
            let context_choices: Vec<Vec<Vec<usize>>> = intervened
                .iter()
                .map(|&x| {
                    let below = reach_cut(g, x, &intervened);
                    let candidates: Vec<usize> = observed
                        .iter()
                        .copied()
                        .filter(|&c| c != x && !below[c])
                        .collect();
                    small_subsets(&candidates, opts.max_context)
                })
                .collect();
            if k == 1 {
                let single = SinglePair::new(g, intervened[0], &context_choices[0]);
                for ctx in &context_choices[0] {
                    found.insert(single.prune(g, ctx));
                }
                continue;
            }
            let mut choice = vec![0usize; intervened.len()];
            loop {
                let scope: IndexScope = intervened
                    .iter()
                    .zip(&choice)
                    .enumerate()
                    .map(|(j, (&x, &pick))| (x, context_choices[j][pick].clone()))
                    .collect();
                if surgery_of(g, &scope).is_acyclic() {
                    found.insert(prune_indices(g, scope));
                }
                // Odometer over context choices.
                let mut j = 0;
                while j < choice.len() {
                    choice[j] += 1;
                    if choice[j] < context_choices[j].len() {
                        break;
                    }
                    choice[j] = 0;
                    j += 1;
                }
                if j == choice.len() {
                    break;
                }
            }
        }
    }
    let scopes = found.iter().map(|s| to_scope(g, s));
    ScopeSet::new(scopes, ScopeOrigin::Enumerated).expect("index scopes are unique")
}

/// Pruning of one-pair scopes `<x|C>` with the graph work done once per `x`.
///
/// With a single pair the mutilated graph is always acyclic, and its
/// ancestors of `{x, target}` are those with no contexts plus the ancestors
/// of each context (none of which descends from `x`). Gives the same result
/// as [`prune_indices`].
struct SinglePair {
    x: usize,
    reaches_target: bool,
    base: Vec<bool>,
    /// Ancestor masks (inclusive) of candidate contexts, by node.
    above: Vec<Option<Vec<bool>>>,
}

impl SinglePair {
    fn new(g: &CausalGraph, x: usize, choices: &[Vec<usize>]) -> SinglePair {
        let bare = vec![(x, Vec::new())];
        let surgery = surgery_of(g, &bare);
        let reaches_target = surgery.ancestors_of(&[g.target_index()])[x];
        let base = surgery.ancestors_of(&[x, g.target_index()]);
        let mut above = vec![None; g.len()];
        for &c in choices.iter().flatten() {
            if above[c].is_none() {
                above[c] = Some(surgery.ancestors_of(&[c]));
            }
        }
        SinglePair { x, reaches_target, base, above }
    }

    fn prune(&self, g: &CausalGraph, ctx: &[usize]) -> IndexScope {
        if !self.reaches_target {
            return Vec::new();
        }
        let x = self.x;
        let mut ctx = ctx.to_vec();
        loop {
            let relevant = |u: usize| {
                self.base[u]
                    || ctx
                        .iter()
                        .any(|&c| self.above[c].as_ref().is_some_and(|a| a[u]))
            };
            let keep: Vec<bool> = ctx
                .iter()
                .map(|&c| {
                    c == g.target_index()
                        || g.children(c).iter().any(|&u| u != x && relevant(u))
                        || g.spouses(c).iter().any(|&u| u != x && relevant(u))
                })
                .collect();
            if keep.iter().all(|&k| k) {
                return vec![(x, ctx)];
            }
            let mut flags = keep.into_iter();
            ctx.retain(|_| flags.next().unwrap_or(true));
        }
    }
}

/// Descendants of `x` in the graph with every edge into `cut` removed.
fn reach_cut(g: &CausalGraph, x: usize, cut: &[usize]) -> Vec<bool> {
    crate::graph::reach(g.len(), &[x], |u| {
        g.children(u).iter().copied().filter(move |c| !cut.contains(c))
    })
}

/// All subsets of `items` of size at most `k`, smallest first.
fn small_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for size in 1..=k.min(items.len()) {
        for combo in Combinations::new(items.len(), size) {
            out.push(combo.iter().map(|&i| items[i]).collect());
        }
    }
    out
}

/// Lexicographic k-combinations of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn pair(x: &str, ctx: &[&str]) -> ScopePair {
        ScopePair {
            intervened: x.to_string(),
            contexts: ctx.iter().map(|c| c.to_string()).collect(),
        }
    }

    fn scope(pairs: &[(&str, &[&str])]) -> MixedPolicyScope {
        MixedPolicyScope::try_from_pairs(pairs.iter().map(|(x, c)| pair(x, c))).unwrap()
    }

    #[test]
    fn validate_examples() {
        let g = fixtures::toy_graph();
        assert!(validate_mps(&g, &scope(&[("X1", &["C"])])).unwrap());
        assert!(validate_mps(&g, &MixedPolicyScope::empty()).unwrap());
        assert!(!validate_mps(&g, &scope(&[("X2", &["Y"])])).unwrap());
        // Contexts may not be the intervened variable itself.
        assert!(!validate_mps(&g, &scope(&[("X2", &["X2"])])).unwrap());
        // C is observed only.
        assert!(!validate_mps(&g, &scope(&[("C", &[])])).unwrap());
        assert!(validate_mps(&g, &scope(&[("Q", &[])])).is_err());
    }

    #[test]
    fn subsumption_examples() {
        let big = scope(&[("X1", &["C"]), ("X2", &["C"])]);
        let small = scope(&[("X1", &[])]);
        assert!(subsumes(&big, &small));
        assert!(!subsumes(&small, &big));
        assert!(subsumes(&big, &big));
        assert!(!subsumes(&scope(&[("X1", &[])]), &scope(&[("X2", &[])])));
        assert!(subsumes(&small, &MixedPolicyScope::empty()));
    }

    #[test]
    fn minimal_scope_is_a_fixed_point() {
        let g = fixtures::toy_graph();
        let s = scope(&[("X1", &["C"])]);
        assert_eq!(prune_redundant(&g, &s).unwrap(), s);
    }

    #[test]
    fn isolated_intervention_is_pruned() {
        let g = crate::graph::parse_graph("var A manipulable\nvar Y target\n").unwrap();
        let s = scope(&[("A", &[])]);
        assert!(prune_redundant(&g, &s).unwrap().is_empty());
    }

    #[test]
    fn large_system_plate_interventions_are_cut_by_x2() {
        let g = fixtures::large_graph();
        let mut pairs = vec![pair("X2", &["C1"])];
        for j in 1..=fixtures::LARGE_X_PLATE {
            pairs.push(pair(&format!("Xt{j}"), &["C0"]));
        }
        let s = MixedPolicyScope::try_from_pairs(pairs).unwrap();
        assert!(validate_mps(&g, &s).unwrap());
        let pruned = prune_redundant(&g, &s).unwrap();
        assert_eq!(pruned, scope(&[("X2", &["C1"])]));
        // Without X2 the plate variables still reach Y through C5 and C6.
        let xt = scope(&[("Xt1", &["C0"])]);
        assert_eq!(prune_redundant(&g, &xt).unwrap(), xt);
    }

    #[test]
    fn enumeration_without_manipulable_variables() {
        let g = crate::graph::parse_graph("var C context\nvar Y target\nedge C -> Y").unwrap();
        let set = enumerate_scopes(&g, 2);
        assert_eq!(set.scopes(), &[MixedPolicyScope::empty()]);
    }

    #[test]
    fn enumeration_contains_toy_fixture() {
        let g = fixtures::toy_graph();
        let set = enumerate_scopes(&g, 1);
        assert!(set.contains(&scope(&[("X1", &["C"])])));
        assert!(set.contains(&scope(&[("X2", &["C"])])));
        for s in set.iter() {
            assert!(validate_mps(&g, s).unwrap(), "{s}");
        }
    }

    #[test]
    fn enumeration_contains_fig4_scopes() {
        let g = fixtures::fig4_graph();
        let set = enumerate_scopes(&g, 2);
        assert!(set.contains(&scope(&[("X1", &["X2"])])));
        assert!(set.contains(&scope(&[("X2", &["X1"])])));
        assert!(set.contains(&scope(&[("X1", &[]), ("X2", &[])])));
        assert!(!set.contains(&scope(&[("X1", &["X2"]), ("X2", &["X1"])])));
    }

    #[test]
    fn scope_set_rejects_duplicates_and_sorts() {
        let a = scope(&[("X2", &[])]);
        let b = scope(&[("X1", &["C"])]);
        let set = ScopeSet::new([a.clone(), b.clone()], ScopeOrigin::User).unwrap();
        assert_eq!(set.scopes(), &[b, a.clone()]);
        assert!(matches!(
            ScopeSet::new([a.clone(), a], ScopeOrigin::User),
            Err(ScopeError::Duplicate(_))
        ));
    }

    #[test]
    fn scope_file_round_trip() {
        let text = "pair X1 | C1,C6\n\npair X2 | C1\n\npassive\n\npair A |\npair B | A\n";
        let scopes = parse_scopes(text).unwrap();
        assert_eq!(scopes.len(), 4);
        assert_eq!(scopes[0], scope(&[("X1", &["C1", "C6"])]));
        assert!(scopes[2].is_empty());
        assert_eq!(scopes[3].canonical_name(), "<A|><B|A>");
        let set = ScopeSet::new(scopes, ScopeOrigin::User).unwrap();
        let again = ScopeSet::new(parse_scopes(&set.to_text()).unwrap(), ScopeOrigin::User).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn scope_file_errors() {
        assert!(matches!(
            parse_scopes("pair X1 C\n"),
            Err(ScopeError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_scopes("pair X1 | C\npair X1 |\n"),
            Err(ScopeError::RepeatedIntervention(_))
        ));
        assert!(matches!(
            parse_scopes("# header\npair X1 | C = 0\n"),
            Err(ScopeError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn canonical_names() {
        assert_eq!(MixedPolicyScope::empty().canonical_name(), "{}");
        assert_eq!(
            scope(&[("X2", &["C1"]), ("X1", &["C6", "C1"])]).canonical_name(),
            "<X1|C1,C6><X2|C1>"
        );
    }

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(small_subsets(&[1, 2, 3, 4], 2).len(), 1 + 4 + 6);
    }
}
