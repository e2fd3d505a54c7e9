//! Command bodies behind the binary, returning printable text.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cocabo_core::fixtures::{fixture_graph, load_fixture, FIXTURE_NAMES};
use cocabo_core::scm::{builtin, parse_scm, Estimate, ExprPolicy, Policy, Scm, ScmError};
use cocabo_core::scope::{enumerate_scopes_with, EnumerationOptions};
use cocabo_core::{parse_graph, CausalGraph, GraphError, ScopeError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("{0}")]
    Usage(String),
}

fn read(path: &Path) -> Result<String, CommandError> {
    fs::read_to_string(path).map_err(|source| CommandError::Io { path: path.to_path_buf(), source })
}

pub fn load_graph(path: &Path) -> Result<CausalGraph, CommandError> {
    Ok(parse_graph(&read(path)?)?)
}

pub fn load_scm(path: &Path) -> Result<Scm, CommandError> {
    Ok(parse_scm(&read(path)?)?)
}

/// Enumerated scopes of `g`, one canonical name per line, or in scope-file
/// form when `as_text` is set.
pub fn graph_pomps(g: &CausalGraph, opts: EnumerationOptions, as_text: bool) -> String {
    let set = enumerate_scopes_with(g, opts);
    if as_text {
        let mut s = set.to_text();
        s.push('\n');
        return s;
    }
    let mut s = String::new();
    for name in set.canonical_names() {
        let _ = writeln!(s, "{name}");
    }
    let _ = writeln!(s, "# {} scopes", set.len());
    s
}

pub fn fixtures_list() -> Result<String, CommandError> {
    let mut s = String::new();
    for name in FIXTURE_NAMES {
        let set = load_fixture(name)?;
        let g = fixture_graph(name)?;
        let _ = writeln!(
            s,
            "{name}\t{} scopes\t{} variables\t{}",
            set.len(),
            g.len(),
            set.canonical_names().join(" ")
        );
    }
    Ok(s)
}

/// Monte Carlo estimate of the target's mean under `policy`.
pub fn scm_check<P: Policy + ?Sized>(scm: &Scm, policy: &mut P, n: usize, seed: u64) -> Result<Estimate, CommandError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(scm.estimate_expectation(policy, n, &mut rng)?)
}

/// Model and policy for `scm check`: either files, or a builtin with its
/// closed-form optimal policy or a policy file.
pub fn scm_check_command(
    scm: Option<&Path>,
    builtin_name: Option<&str>,
    policy: Option<&Path>,
    optimal: bool,
    n: usize,
    seed: u64,
) -> Result<Estimate, CommandError> {
    let model = match (scm, builtin_name) {
        (Some(p), None) => load_scm(p)?,
        (None, Some(b)) => builtin(b)?.scm,
        _ => return Err(CommandError::Usage("give exactly one of --scm or --builtin".into())),
    };
    match (policy, optimal, builtin_name) {
        (Some(p), false, _) => {
            let mut pol = ExprPolicy::from_text(&read(p)?)?;
            scm_check(&model, &mut pol, n, seed)
        }
        (None, true, Some(b)) => {
            let mut pol = builtin(b)?.optimal_policy;
            scm_check(&model, &mut pol, n, seed)
        }
        (None, true, None) => Err(CommandError::Usage("--optimal needs --builtin".into())),
        _ => Err(CommandError::Usage("give exactly one of --policy or --optimal".into())),
    }
}

pub fn format_estimate(e: &Estimate) -> String {
    format!("{:.6} ± {:.6} (n = {})", e.mean, e.std_error, e.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cocabo_core::scm::{Passive, TOY_SCM};

    #[test]
    fn fixtures_are_listed() {
        let text = fixtures_list().unwrap();
        assert_eq!(text.lines().count(), FIXTURE_NAMES.len());
        assert!(text.lines().next().unwrap().starts_with("toy_pomps\t2 scopes"));
    }

    #[test]
    fn toy_scopes() {
        let g = cocabo_core::fixtures::toy_graph();
        let out = graph_pomps(&g, EnumerationOptions::default(), false);
        assert!(out.lines().any(|l| l == "<X1|C>"));
        let text = graph_pomps(&g, EnumerationOptions::default(), true);
        let back = cocabo_core::scope::parse_scopes(&text).unwrap();
        assert_eq!(back.len(), out.lines().count() - 1);
    }

    #[test]
    fn estimate_and_format() {
        let scm = parse_scm(TOY_SCM).unwrap();
        let e = scm_check(&scm, &mut Passive::new(), 1000, 1).unwrap();
        assert_eq!(e.n, 1000);
        assert_eq!(e, scm_check(&scm, &mut Passive::new(), 1000, 1).unwrap());
        assert!(format_estimate(&e).contains(" ± "));
        assert!(scm_check(&scm, &mut Passive::new(), 0, 1).is_err());
        assert!(scm_check_command(None, None, None, true, 10, 0).is_err());
        assert!(scm_check_command(None, Some("toy"), None, false, 10, 0).is_err());
        let opt = scm_check_command(None, Some("toy"), None, true, 2000, 0).unwrap();
        assert!((opt.mean - 1.0 / 3.0).abs() < 0.05);
    }
}
