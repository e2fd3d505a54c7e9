//! Reference causal graphs and their known scope sets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{parse_graph, CausalGraph};
use crate::scope::{MixedPolicyScope, ScopeError, ScopeOrigin, ScopeSet};

/// Two controllable variables, one context, latent confounders `X1 <-> C`
/// and `X2 <-> Y`.
pub const TOY_GRAPH: &str = "\
var C context
var X1 manipulable
var X2 manipulable
var Y target
edge X1 -> X2
edge X2 -> Y
edge C -> X2
edge C -> Y
confound X1 <-> C
confound X2 <-> Y
";

/// Prostate-specific antigen graph: drugs chosen by age and BMI. Age and BMI
/// also feed `Cancer`, as its structural equation reads both.
pub const PSA_GRAPH: &str = "\
var Age context
var BMI context
var Aspirin manipulable
var Statin manipulable
var Cancer context
var PSA target
edge Age -> BMI
edge Age -> Aspirin
edge BMI -> Aspirin
edge Age -> Statin
edge BMI -> Statin
edge Aspirin -> Cancer
edge Statin -> Cancer
edge Age -> Cancer
edge BMI -> Cancer
edge Aspirin -> PSA
edge Statin -> PSA
edge Cancer -> PSA
edge Age -> PSA
edge BMI -> PSA
";

/// Two direct causes of `Y`, one of them confounded with it. No two
/// possibly-optimal scopes share a context here.
pub const FIG4_GRAPH: &str = "\
var X1 manipulable
var X2 manipulable
var Y target
edge X1 -> Y
edge X2 -> Y
confound X1 <-> Y
";

/// Size of the redundant context plate `Ct1..Ct50` of the large system.
pub const LARGE_C_PLATE: usize = 50;
/// Size of the redundant manipulable plate `Xt1..Xt27` of the large system.
pub const LARGE_X_PLATE: usize = 27;

/// The large system: a chain `C0 -> ... -> C6`, two useful controls and two
/// plates of variables that only reach the rest through `C5`.
pub fn large_graph_text() -> String {
    let mut out = String::new();
    for i in 0..=6 {
        out.push_str(&format!("var C{i} context\n"));
    }
    for i in 1..=LARGE_C_PLATE {
        out.push_str(&format!("var Ct{i} context\n"));
    }
    out.push_str("var X1 manipulable\nvar X2 manipulable\n");
    for j in 1..=LARGE_X_PLATE {
        out.push_str(&format!("var Xt{j} manipulable\n"));
    }
    out.push_str("var Y target\n");
    for (a, b) in [
        ("C0", "C1"),
        ("C1", "C2"),
        ("C1", "X2"),
        ("C2", "C3"),
        ("C3", "C4"),
        ("C4", "C5"),
        ("C5", "C6"),
        ("C6", "X2"),
        ("X1", "X2"),
        ("X2", "Y"),
        ("C1", "Y"),
    ] {
        out.push_str(&format!("edge {a} -> {b}\n"));
    }
    for j in 1..=LARGE_X_PLATE {
        for i in 1..=LARGE_C_PLATE {
            out.push_str(&format!("edge Ct{i} -> Xt{j}\n"));
        }
        out.push_str(&format!("edge Xt{j} -> C5\n"));
    }
    out.push_str("confound C1 <-> X1\nconfound X2 <-> Y\n");
    out
}

pub fn toy_graph() -> CausalGraph {
    parse_graph(TOY_GRAPH).expect("toy graph is valid")
}

pub fn psa_graph() -> CausalGraph {
    parse_graph(PSA_GRAPH).expect("PSA graph is valid")
}

pub fn fig4_graph() -> CausalGraph {
    parse_graph(FIG4_GRAPH).expect("fig4 graph is valid")
}

pub fn large_graph() -> CausalGraph {
    parse_graph(&large_graph_text()).expect("large graph is valid")
}

pub const FIXTURE_NAMES: [&str; 6] = [
    "toy_pomps",
    "toy_pomis",
    "psa_pomps",
    "psa_pomis",
    "large_pomps",
    "fig4_pomps",
];

fn set(scopes: Vec<MixedPolicyScope>) -> ScopeSet {
    ScopeSet::new(scopes, ScopeOrigin::Fixture).expect("fixture scopes are distinct")
}

fn interventions(vars: &[&str]) -> MixedPolicyScope {
    let none: &[&str] = &[];
    MixedPolicyScope::from_pairs(vars.iter().map(|x| (*x, none)))
}

/// Known scope sets for the reference graphs.
pub fn load_fixture(name: &str) -> Result<ScopeSet, ScopeError> {
    let p = |pairs: &[(&str, &'static [&'static str])]| {
        MixedPolicyScope::from_pairs(pairs.iter().copied())
    };
    let scopes = match name {
        "toy_pomps" => Vec::from([p(&[("X1", &["C"])]), p(&[("X2", &["C"])])]),
        "toy_pomis" => Vec::from([
            MixedPolicyScope::empty(),
            interventions(&["X1"]),
            interventions(&["X2"]),
        ]),
        "psa_pomps" => Vec::from([p(&[
            ("Aspirin", &["Age", "BMI"]),
            ("Statin", &["Age", "BMI"]),
        ])]),
        "psa_pomis" => Vec::from([
            MixedPolicyScope::empty(),
            interventions(&["Aspirin"]),
            interventions(&["Statin"]),
            interventions(&["Aspirin", "Statin"]),
        ]),
        "large_pomps" => Vec::from([p(&[("X1", &["C1", "C6"])]), p(&[("X2", &["C1"])])]),
        "fig4_pomps" => Vec::from([
            p(&[("X1", &["X2"])]),
            p(&[("X2", &["X1"])]),
            interventions(&["X1", "X2"]),
        ]),
        other => return Err(ScopeError::UnknownFixture(other.into())),
    };
    Ok(set(scopes))
}

/// The graph a fixture scope set belongs to.
pub fn fixture_graph(name: &str) -> Result<CausalGraph, ScopeError> {
    match name {
        "toy_pomps" | "toy_pomis" => Ok(toy_graph()),
        "psa_pomps" | "psa_pomis" => Ok(psa_graph()),
        "large_pomps" => Ok(large_graph()),
        "fig4_pomps" => Ok(fig4_graph()),
        other => Err(ScopeError::UnknownFixture(other.into())),
    }
}
