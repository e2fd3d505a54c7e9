//! Causal diagrams with latent confounders.
//!
//! A [`CausalGraph`] is an acyclic directed mixed graph: directed edges carry
//! causation, bidirected edges stand for unobserved common causes. Variables
//! are kept sorted by name and addressed internally by index, so every
//! traversal below is deterministic.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scope::MixedPolicyScope;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("directed part of the graph contains a cycle")]
    DirectedCycle,
    #[error("graph must have exactly one target variable, found {0}")]
    TargetCount(usize),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Role a variable plays for the optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    /// Can be intervened on (and may also serve as a context).
    Manipulable,
    /// Observed only.
    Context,
    /// The variable whose expectation is optimised.
    Target,
}

impl VarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::Manipulable => "manipulable",
            VarKind::Context => "context",
            VarKind::Target => "target",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "manipulable" => Some(VarKind::Manipulable),
            "context" => Some(VarKind::Context),
            "target" => Some(VarKind::Target),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VarKind) -> Self {
        Variable { name: name.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    vars: Vec<Variable>,
    index: BTreeMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    spouses: Vec<Vec<usize>>,
    target: usize,
}

impl CausalGraph {
    /// Builds a validated graph. The directed part must be acyclic.
    pub fn new<S, I, D, B>(vars: I, directed: D, bidirected: B) -> Result<Self, GraphError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = Variable>,
        D: IntoIterator<Item = (S, S)>,
        B: IntoIterator<Item = (S, S)>,
    {
        let g = Self::build(vars, directed, bidirected)?;
        if !g.is_acyclic() {
            return Err(GraphError::DirectedCycle);
        }
        Ok(g)
    }

    /// Same checks as [`CausalGraph::new`] except acyclicity.
    fn build<S, I, D, B>(vars: I, directed: D, bidirected: B) -> Result<Self, GraphError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = Variable>,
        D: IntoIterator<Item = (S, S)>,
        B: IntoIterator<Item = (S, S)>,
    {
        let mut vars: Vec<Variable> = vars.into_iter().collect();
        vars.sort();
        for w in vars.windows(2) {
            if w[0].name == w[1].name {
                return Err(GraphError::DuplicateVariable(w[0].name.clone()));
            }
        }
        let targets: Vec<usize> = (0..vars.len())
            .filter(|&i| vars[i].kind == VarKind::Target)
            .collect();
        if targets.len() != 1 {
            return Err(GraphError::TargetCount(targets.len()));
        }
        let index: BTreeMap<String, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownVariable(name.to_string()))
        };

        let mut dir = BTreeSet::new();
        for (a, b) in directed {
            let (a, b) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if a == b {
                return Err(GraphError::SelfLoop(vars[a].name.clone()));
            }
            dir.insert((a, b));
        }
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            let (a, b) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if a == b {
                return Err(GraphError::SelfLoop(vars[a].name.clone()));
            }
            bi.insert((a.min(b), a.max(b)));
        }
        let target = targets[0];
        Ok(Self::assemble(vars, index, dir, bi, target))
    }

    fn assemble(
        vars: Vec<Variable>,
        index: BTreeMap<String, usize>,
        directed: BTreeSet<(usize, usize)>,
        bidirected: BTreeSet<(usize, usize)>,
        target: usize,
    ) -> Self {
        let n = vars.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut spouses = vec![Vec::new(); n];
        for &(a, b) in &directed {
            children[a].push(b);
            parents[b].push(a);
        }
        for &(a, b) in &bidirected {
            spouses[a].push(b);
            spouses[b].push(a);
        }
        for list in parents.iter_mut().chain(spouses.iter_mut()) {
            list.sort_unstable();
        }
        CausalGraph {
            vars,
            index,
            directed,
            bidirected,
            parents,
            children,
            spouses,
            target,
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Variables in name order.
    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn kind(&self, i: usize) -> VarKind {
        self.vars[i].kind
    }

    pub fn kind_of(&self, name: &str) -> Option<VarKind> {
        self.index_of(name).map(|i| self.vars[i].kind)
    }

    pub fn target(&self) -> &str {
        &self.vars[self.target].name
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Nodes sharing a bidirected edge with `i`.
    pub fn spouses(&self, i: usize) -> &[usize] {
        &self.spouses[i]
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.directed
            .iter()
            .map(move |&(a, b)| (self.name(a), self.name(b)))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.bidirected
            .iter()
            .map(move |&(a, b)| (self.name(a), self.name(b)))
    }

    pub fn directed_edge_count(&self) -> usize {
        self.directed.len()
    }

    pub fn bidirected_edge_count(&self) -> usize {
        self.bidirected.len()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.directed.contains(&(a, b)),
            _ => false,
        }
    }

    pub fn has_confounder(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(a), Some(b)) => self.bidirected.contains(&(a.min(b), a.max(b))),
            _ => false,
        }
    }

    /// Names of variables of the given kind, in name order.
    pub fn names_of_kind(&self, kind: VarKind) -> impl Iterator<Item = &str> + '_ {
        self.vars
            .iter()
            .filter(move |v| v.kind == kind)
            .map(|v| v.name.as_str())
    }

    /// True iff the directed part has no cycle. Bidirected edges are ignored.
    pub fn is_acyclic(&self) -> bool {
        kahn(self.len(), |v| self.children[v].iter().copied()).is_some()
    }

    /// Topological order with ties broken by variable name.
    pub fn topological_order(&self) -> Result<Vec<String>, GraphError> {
        let order = self.topological_indices()?;
        Ok(order.into_iter().map(|i| self.vars[i].name.clone()).collect())
    }

    pub fn topological_indices(&self) -> Result<Vec<usize>, GraphError> {
        kahn(self.len(), |v| self.children[v].iter().copied()).ok_or(GraphError::DirectedCycle)
    }

    /// True iff a directed path from `name` to the target exists.
    pub fn reachable_to_target(&self, name: &str) -> Result<bool, GraphError> {
        let v = self.require(name)?;
        Ok(self.descendants(v)[self.target])
    }

    /// Membership mask of `v` and everything reachable from it.
    pub fn descendants(&self, v: usize) -> Vec<bool> {
        reach(self.len(), &[v], |u| self.children[u].iter().copied())
    }

    /// Membership mask of the given nodes and all their ancestors.
    pub fn ancestors(&self, of: &[usize]) -> Vec<bool> {
        reach(self.len(), of, |u| self.parents[u].iter().copied())
    }

    /// Graph surgery for a mixed policy scope: for each pair `<X | C_X>` every
    /// directed edge into `X` and every bidirected edge touching `X` is
    /// removed, then `C -> X` is added for each `C` in `C_X`. The result can be
    /// cyclic; check with [`CausalGraph::is_acyclic`].
    pub fn mutilate(&self, scope: &MixedPolicyScope) -> Result<CausalGraph, GraphError> {
        let surgery = Surgery::new(self, scope)?;
        let mut directed: BTreeSet<(usize, usize)> = self
            .directed
            .iter()
            .copied()
            .filter(|&(_, b)| !surgery.is_intervened(b))
            .collect();
        for (x, ctx) in surgery.contexts.iter().enumerate() {
            if let Some(ctx) = ctx {
                directed.extend(ctx.iter().map(|&c| (c, x)));
            }
        }
        let bidirected = self
            .bidirected
            .iter()
            .copied()
            .filter(|&(a, b)| !surgery.is_intervened(a) && !surgery.is_intervened(b))
            .collect();
        Ok(Self::assemble(
            self.vars.clone(),
            self.index.clone(),
            directed,
            bidirected,
            self.target,
        ))
    }

    /// Canonical text form: sorted `var`, `edge` and `confound` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vars {
            let _ = writeln!(out, "var {} {}", v.name, v.kind.keyword());
        }
        let mut edges: Vec<String> = self
            .directed_edges()
            .map(|(a, b)| format!("edge {a} -> {b}"))
            .collect();
        edges.sort();
        let mut confounds: Vec<String> = self
            .bidirected_edges()
            .map(|(a, b)| {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                format!("confound {a} <-> {b}")
            })
            .collect();
        confounds.sort();
        for line in edges.iter().chain(confounds.iter()) {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

impl core::str::FromStr for CausalGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_graph(s)
    }
}

/// Parses the line-oriented graph format.
///
/// ```text
/// var X1 manipulable
/// var C context
/// var Y target
/// edge X1 -> Y
/// confound X1 <-> C
/// ```
pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let mut vars = Vec::new();
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| GraphError::Syntax {
            line: lineno + 1,
            message: message.to_string(),
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["var", name, kind] => {
                check_identifier(name).map_err(|m| syntax(&m))?;
                let kind = VarKind::from_keyword(kind)
                    .ok_or_else(|| syntax(&format!("unknown variable kind `{kind}`")))?;
                vars.push(Variable::new(*name, kind));
            }
            ["edge", a, "->", b] => directed.push((a.to_string(), b.to_string())),
            ["confound", a, "<->", b] => bidirected.push((a.to_string(), b.to_string())),
            _ => return Err(syntax(&format!("unrecognised statement `{line}`"))),
        }
    }
    CausalGraph::new(vars, directed, bidirected)
}

pub(crate) fn check_identifier(name: &str) -> Result<(), String> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(format!("invalid identifier `{name}`"))
    }
}

/// Kahn's algorithm with a min-heap, so ties resolve to the smallest index
/// (which is name order for graphs).
pub(crate) fn kahn<F, I>(n: usize, children: F) -> Option<Vec<usize>>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut indegree = vec![0usize; n];
    for v in 0..n {
        for c in children(v) {
            indegree[c] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&v| indegree[v] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for c in children(v) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub(crate) fn reach<F, I>(n: usize, start: &[usize], next: F) -> Vec<bool>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    for &s in start {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for v in next(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Mutilated graph viewed lazily on top of its host graph. Used by scope
/// validation and pruning, which test many scopes against one graph.
pub(crate) struct Surgery<'g> {
    graph: &'g CausalGraph,
    /// Context indices per intervened variable, `None` when not intervened.
    contexts: Vec<Option<Vec<usize>>>,
    /// Intervened variables reading each node as a context.
    readers: Vec<Vec<usize>>,
}

impl<'g> Surgery<'g> {
    pub(crate) fn new(graph: &'g CausalGraph, scope: &MixedPolicyScope) -> Result<Self, GraphError> {
        let n = graph.len();
        let mut contexts: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut readers = vec![Vec::new(); n];
        for (x, ctx) in scope.pairs() {
            let xi = graph.require(x)?;
            let mut list = Vec::with_capacity(ctx.len());
            for c in ctx {
                let ci = graph.require(c)?;
                list.push(ci);
                readers[ci].push(xi);
            }
            contexts[xi] = Some(list);
        }
        Ok(Surgery {
            graph,
            contexts,
            readers,
        })
    }

    pub(crate) fn from_indices(graph: &'g CausalGraph, scope: &[(usize, Vec<usize>)]) -> Self {
        let n = graph.len();
        let mut contexts: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut readers = vec![Vec::new(); n];
        for (x, ctx) in scope {
            for &c in ctx {
                readers[c].push(*x);
            }
            contexts[*x] = Some(ctx.clone());
        }
        Surgery {
            graph,
            contexts,
            readers,
        }
    }

    pub(crate) fn is_intervened(&self, v: usize) -> bool {
        self.contexts[v].is_some()
    }

    pub(crate) fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.children[v]
            .iter()
            .copied()
            .filter(move |&c| !self.is_intervened(c))
            .chain(self.readers[v].iter().copied())
    }

    /// Children of `v` ignoring the added context edge `v -> skip`.
    pub(crate) fn children_except(&self, v: usize, skip: usize) -> impl Iterator<Item = usize> + '_ {
        self.children(v).filter(move |&c| c != skip)
    }

    pub(crate) fn is_acyclic(&self) -> bool {
        kahn(self.graph.len(), |v| self.children(v)).is_some()
    }

    /// Mask of nodes with a directed path to some node in `targets`, in the
    /// mutilated graph.
    pub(crate) fn ancestors_of(&self, targets: &[usize]) -> Vec<bool> {
        let n = self.graph.len();
        // Parents in the mutilated graph: original parents unless intervened.
        reach(n, targets, |u| {
            let original: &[usize] = if self.is_intervened(u) {
                &[]
            } else {
                &self.graph.parents[u]
            };
            let added: &[usize] = self.contexts[u].as_deref().unwrap_or(&[]);
            original.iter().copied().chain(added.iter().copied())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scope::MixedPolicyScope;

    fn fig1a() -> CausalGraph {
        fixtures::toy_graph()
    }

    #[test]
    fn parses_fig1a_spec() {
        let g = parse_graph(fixtures::TOY_GRAPH).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.directed_edge_count(), 4);
        assert_eq!(g.bidirected_edge_count(), 2);
        assert_eq!(g.target(), "Y");
        assert!(g.has_confounder("C", "X1"));
        assert!(g.has_confounder("Y", "X2"));
    }

    #[test]
    fn single_target_node_is_valid() {
        let g = parse_graph("var Y target\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.topological_order().unwrap(), ["Y"]);
        assert!(g.reachable_to_target("Y").unwrap());
    }

    #[test]
    fn rejects_two_cycle() {
        let text = "var A context\nvar B context\nvar Y target\nedge A -> B\nedge B -> A\n";
        assert_eq!(parse_graph(text), Err(GraphError::DirectedCycle));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_graph("var A context\nvar A context\nvar Y target"),
            Err(GraphError::DuplicateVariable("A".into()))
        );
        assert_eq!(
            parse_graph("var Y target\nedge Z -> Y"),
            Err(GraphError::UnknownVariable("Z".into()))
        );
        assert_eq!(parse_graph("var A context"), Err(GraphError::TargetCount(0)));
        assert_eq!(
            parse_graph("var A target\nvar Y target"),
            Err(GraphError::TargetCount(2))
        );
        assert!(matches!(
            parse_graph("var Y target\nedge Y => Y"),
            Err(GraphError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("var Y target\nvar A sometimes"),
            Err(GraphError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn mutilation_of_x2_on_c() {
        let g = fig1a();
        let s = MixedPolicyScope::from_pairs([("X2", &["C"][..])]);
        let m = g.mutilate(&s).unwrap();
        assert!(!m.has_edge("X1", "X2"));
        assert!(!m.has_confounder("X2", "Y"));
        assert!(m.has_edge("C", "X2"));
        assert!(m.has_edge("X2", "Y"));
        assert!(m.has_edge("C", "Y"));
        assert!(m.has_confounder("X1", "C"));
        assert_eq!(m.directed_edge_count(), 3);
        assert_eq!(m.bidirected_edge_count(), 1);
        assert!(m.is_acyclic());
    }

    #[test]
    fn empty_scope_is_identity() {
        let g = fig1a();
        assert_eq!(g.mutilate(&MixedPolicyScope::empty()).unwrap(), g);
    }

    #[test]
    fn context_on_descendant_creates_cycle() {
        let g = fig1a();
        let s = MixedPolicyScope::from_pairs([("X2", &["Y"][..])]);
        let m = g.mutilate(&s).unwrap();
        assert!(m.has_edge("Y", "X2") && m.has_edge("X2", "Y"));
        assert!(!m.is_acyclic());
        assert!(g.is_acyclic());
    }

    #[test]
    fn mutilate_unknown_variable() {
        let s = MixedPolicyScope::from_pairs([("Q", &[][..] as &[&str])]);
        assert_eq!(
            fig1a().mutilate(&s),
            Err(GraphError::UnknownVariable("Q".into()))
        );
    }

    #[test]
    fn reachability() {
        let g = fig1a();
        assert!(g.reachable_to_target("X1").unwrap());
        assert!(g.reachable_to_target("Y").unwrap());
        let g = parse_graph("var A manipulable\nvar Y target").unwrap();
        assert!(!g.reachable_to_target("A").unwrap());
        assert!(g.reachable_to_target("B").is_err());
    }

    #[test]
    fn topological_orders() {
        let chain =
            parse_graph("var A context\nvar B context\nvar C target\nedge B -> C\nedge A -> B")
                .unwrap();
        assert_eq!(chain.topological_order().unwrap(), ["A", "B", "C"]);
        // C and X1 are both sources; name order breaks the tie.
        assert_eq!(fig1a().topological_order().unwrap(), ["C", "X1", "X2", "Y"]);
    }

    #[test]
    fn canonical_text_is_sorted() {
        let text = "var Y target\nvar A manipulable\nconfound Y <-> A\nedge A -> Y\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(
            g.to_text(),
            "var A manipulable\nvar Y target\nedge A -> Y\nconfound A <-> Y\n"
        );
    }
}
