use alloc::format;
use alloc::string::String;

use super::{parse_scm, Policy, Realised, Scm, ScmError};
use crate::fixtures::{self, LARGE_C_PLATE, LARGE_X_PLATE};
use crate::graph::CausalGraph;
use crate::scope::MixedPolicyScope;
use crate::Objective;

pub const BUILTIN_NAMES: [&str; 5] = [
    "toy",
    "psa_homogeneous",
    "psa_heterogeneous",
    "cobo_favorable",
    "large_system",
];

/// Two controls and one context; setting `X1 = -C` is optimal, and any rule
/// fixing `X2` from `C` loses the `U2 * X2` term. The constant on `C` is 1.
pub const TOY_SCM: &str = "\
exo U1 ~ uniform(-1, 1)
exo U2 ~ uniform(-1, 1)
X1 = U1
C = U1
X2 = U2 * exp(-pow(X1 + C, 2))
Y = U2 * X2 + 1 * C
domain X1 [-1, 1]
domain X2 [-1, 1]
target Y
";

pub const PSA_HOMOGENEOUS_SCM: &str = "\
exo eps ~ normal(0, 0.4)
Age = uniform(55, 75)
BMI = normal(27.0 - 0.01 * Age, 0.7)
Aspirin = sigmoid(-8.0 + 0.10 * Age + 0.03 * BMI)
Statin = sigmoid(-13.0 + 0.10 * Age + 0.20 * BMI)
Cancer = sigmoid(2.2 - 0.05 * Age + 0.01 * BMI - 0.04 * Statin + 0.02 * Aspirin)
PSA = eps + 6.8 + 0.04 * Age - 0.15 * BMI - 0.60 * Statin + 0.55 * Aspirin + Cancer
domain Aspirin [0, 1]
domain Statin [0, 1]
target PSA
";

pub const PSA_HETEROGENEOUS_SCM: &str = "\
exo eps ~ normal(0, 0.01)
Age = uniform(55, 75)
BMI = normal(27.0 - 0.01 * Age, 0.1)
Aspirin = sigmoid(-8.0 + 0.10 * Age + 0.03 * BMI)
Statin = sigmoid(-13.0 + 0.10 * Age + 0.20 * BMI)
Cancer = pow(Statin, 2) + pow((Age - 55) / 21, 2) * pow(abs((BMI - 27) / 4), 2) + pow(Aspirin, 2) / 2
PSA = eps + pow(Aspirin, 2) / 2 + pow((Age - 55) / 21, 2) * pow(abs((BMI - 27) / 4), 2) - 2 * ((Age - 55) / 21) * (Aspirin + Statin) * abs((BMI - 27) / 4) + Cancer
domain Aspirin [0, 1]
domain Statin [0, 1]
target PSA
";

pub const COBO_FAVORABLE_SCM: &str = "\
exo U1 ~ uniform(-1, 1)
exo U2 ~ uniform(-1, 1)
exo eps_C ~ normal(0, 0.1)
exo eps_X1 ~ normal(0, 0.1)
exo eps_Y ~ normal(0, 0.1)
C = U1 + eps_C
X1 = U1 + eps_X1
X2 = abs(C - X1) + 0.2 * U2
Y = cos(C - X2) + 0.1 * U2 + 0.1 * eps_Y
domain X1 [-2, 2]
domain X2 [-2, 2]
target Y
";

/// The large system, with `LARGE_C_PLATE` redundant contexts and
/// `LARGE_X_PLATE` redundant controls.
pub fn large_system_scm_text() -> String {
    let mut s = String::from(
        "\
exo U1 ~ uniform(-1, 1)
exo U2 ~ uniform(-1, 1)
C0 = normal(0, 0.2)
X1 = normal(U1, 0.1)
C1 = normal(C0 - U1, 0.1)
C2 = normal(C1, 0.1)
C3 = normal(C2, 0.1)
C4 = normal(C3, 0.1)
",
    );
    let sum = |prefix: &str, n: usize| {
        let terms: alloc::vec::Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
        terms.join(" + ")
    };
    for i in 1..=LARGE_C_PLATE {
        s.push_str(&format!("Ct{i} = normal(0, 0.2)\n"));
    }
    let ct = sum("Ct", LARGE_C_PLATE);
    for j in 1..=LARGE_X_PLATE {
        s.push_str(&format!("Xt{j} = uniform(-1, 1 + 0.1 * ({ct}) / {LARGE_C_PLATE})\n"));
    }
    let xt = sum("Xt", LARGE_X_PLATE);
    s.push_str(&format!("C5 = normal(C4 + 0.01 * ({xt}) / {LARGE_X_PLATE}, 0.1)\n"));
    s.push_str(
        "\
C6 = normal(C5, 0.1)
X2 = normal(0.5 * (C1 + C6) + X1 + 0.3 * abs(U2), 0.1)
Y = normal(cos(C1 - X2) + 0.1 * U2, 0.01)
domain X1 [-2, 2]
domain X2 [-2, 2]
",
    );
    for j in 1..=LARGE_X_PLATE {
        s.push_str(&format!("domain Xt{j} [-2, 2]\n"));
    }
    s.push_str("target Y\n");
    s
}

/// Expected target of the homogeneous PSA model under `Aspirin = 0,
/// Statin = 1`, by two-dimensional quadrature over age and BMI.
pub const PSA_HOMOGENEOUS_OPTIMUM: f64 = 5.1552870184267725;

/// A closed-form optimal policy.
#[derive(Debug, Clone)]
pub struct AnalyticPolicy {
    scope: MixedPolicyScope,
    pub description: &'static str,
    rule: fn(&str, &Realised<'_>) -> f64,
}

impl Policy for AnalyticPolicy {
    fn scope(&self) -> &MixedPolicyScope {
        &self.scope
    }

    fn act(&mut self, var: &str, realised: &Realised<'_>) -> f64 {
        (self.rule)(var, realised)
    }
}

/// A benchmark problem: model, diagram, objective and known optimum.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub graph: CausalGraph,
    pub scm: Scm,
    pub objective: Objective,
    pub optimal_value: f64,
    pub optimal_policy: AnalyticPolicy,
    /// Fixture holding the possibly-optimal scopes.
    pub pomps: &'static str,
    /// Fixture holding the context-free scopes, where known.
    pub pomis: Option<&'static str>,
}

fn get(r: &Realised<'_>, name: &str) -> f64 {
    r.get(name).unwrap_or(f64::NAN)
}

fn psa_dose(r: &Realised<'_>) -> f64 {
    ((get(r, "Age") - 55.0) / 21.0) * libm::fabs((get(r, "BMI") - 27.0) / 4.0)
}

pub fn builtin(name: &str) -> Result<Benchmark, ScmError> {
    let one = |x: &str, c: &'static [&'static str]| MixedPolicyScope::from_pairs([(x, c)]);
    let age_bmi: &'static [&'static str] = &["Age", "BMI"];
    let psa_scope =
        || MixedPolicyScope::from_pairs([("Aspirin", age_bmi), ("Statin", age_bmi)]);
    let b = match name {
        "toy" => Benchmark {
            name: "toy",
            graph: fixtures::toy_graph(),
            scm: parse_scm(TOY_SCM)?,
            objective: Objective::Maximise,
            optimal_value: 1.0 / 3.0,
            optimal_policy: AnalyticPolicy {
                scope: one("X1", &["C"]),
                description: "X1 = -C",
                rule: |_, r| -get(r, "C"),
            },
            pomps: "toy_pomps",
            pomis: Some("toy_pomis"),
        },
        "psa_homogeneous" => Benchmark {
            name: "psa_homogeneous",
            graph: fixtures::psa_graph(),
            scm: parse_scm(PSA_HOMOGENEOUS_SCM)?,
            objective: Objective::Minimise,
            optimal_value: PSA_HOMOGENEOUS_OPTIMUM,
            optimal_policy: AnalyticPolicy {
                scope: psa_scope(),
                description: "Aspirin = 0, Statin = 1",
                rule: |x, _| if x == "Aspirin" { 0.0 } else { 1.0 },
            },
            pomps: "psa_pomps",
            pomis: Some("psa_pomis"),
        },
        "psa_heterogeneous" => Benchmark {
            name: "psa_heterogeneous",
            graph: fixtures::psa_graph(),
            scm: parse_scm(PSA_HETEROGENEOUS_SCM)?,
            objective: Objective::Minimise,
            optimal_value: 0.0,
            optimal_policy: AnalyticPolicy {
                scope: psa_scope(),
                description: "Aspirin = Statin = ((Age - 55) / 21) * |(BMI - 27) / 4|",
                rule: |_, r| psa_dose(r),
            },
            pomps: "psa_pomps",
            pomis: Some("psa_pomis"),
        },
        "cobo_favorable" => Benchmark {
            name: "cobo_favorable",
            graph: fixtures::toy_graph(),
            scm: parse_scm(COBO_FAVORABLE_SCM)?,
            objective: Objective::Maximise,
            optimal_value: 1.0,
            optimal_policy: AnalyticPolicy {
                scope: one("X2", &["C"]),
                description: "X2 = C",
                rule: |_, r| get(r, "C"),
            },
            pomps: "toy_pomps",
            pomis: Some("toy_pomis"),
        },
        "large_system" => Benchmark {
            name: "large_system",
            graph: fixtures::large_graph(),
            scm: parse_scm(&large_system_scm_text())?,
            objective: Objective::Maximise,
            optimal_value: 1.0,
            optimal_policy: AnalyticPolicy {
                scope: one("X2", &["C1"]),
                description: "X2 = C1",
                rule: |_, r| get(r, "C1"),
            },
            pomps: "large_pomps",
            pomis: None,
        },
        other => return Err(ScmError::UnknownBenchmark(other.into())),
    };
    Ok(b)
}
