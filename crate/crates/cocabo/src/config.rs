//! Grid configuration files (TOML).
//!
//! ```toml
//! seeds = 10            # a count, or an explicit list of seed indices
//! base_seed = 0
//! iterations = 300
//! optimizers = ["cocabo", "cabo", "cobo"]
//!
//! [[benchmarks]]
//! builtin = "toy"
//!
//! [[benchmarks]]
//! name = "mine"
//! graph = "mine.graph"      # relative to this file
//! scm = "mine.scm"
//! objective = "maximise"
//! mu_star = 1.0
//! scopes = "enumerate"      # or "fixture:<name>", or a scope file
//! pomis = "mine.pomis"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use cocabo_core::acquisition::SuggestConfig;
use cocabo_core::engine::{BanditConfig, ExperimentConfig, OptimizerKind, RefitSchedule, ScopeSource};
use cocabo_core::gp::FitConfig;
use cocabo_core::scm::{builtin, parse_scm, Scm};
use cocabo_core::scope::{parse_scopes, EnumerationOptions};
use cocabo_core::{parse_graph, CausalGraph, Objective, ScopeOrigin, ScopeSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("benchmark `{name}`: {message}")]
    Benchmark { name: String, message: String },
}

/// Either a number of seeds (indices `0..n`) or explicit indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn indices(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(10)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    /// Name of a built-in benchmark. Mutually exclusive with `graph`/`scm`.
    pub builtin: Option<String>,
    /// Label used in output paths; defaults to the builtin name.
    pub name: Option<String>,
    pub graph: Option<PathBuf>,
    pub scm: Option<PathBuf>,
    pub objective: Option<Objective>,
    /// Known optimum of the target. Without it no regret is reported for a
    /// user model.
    pub mu_star: Option<f64>,
    /// Scope set for CoCa-BO.
    pub scopes: Option<String>,
    /// Context-free scope set for CaBO.
    pub pomis: Option<String>,
    /// Scope file holding the single CoBO scope.
    pub cobo_scope: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub seeds: Seeds,
    pub base_seed: u64,
    pub iterations: usize,
    /// Worker threads; `None` falls back to the environment, then to the
    /// machine's parallelism.
    pub workers: Option<usize>,
    pub optimizers: Vec<OptimizerKind>,
    pub cabo_epsilon: f64,
    pub bandit: BanditConfig,
    pub gp: FitConfig,
    pub acquisition: SuggestConfig,
    pub refit: RefitSchedule,
    pub enumerate: EnumerationOptions,
    pub benchmarks: Vec<BenchmarkSpec>,
    /// Directory that relative benchmark paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            seeds: Seeds::default(),
            base_seed: 0,
            iterations: 300,
            workers: None,
            optimizers: OptimizerKind::ALL.to_vec(),
            cabo_epsilon: 0.1,
            bandit: BanditConfig::default(),
            gp: FitConfig::default(),
            acquisition: SuggestConfig::default(),
            refit: RefitSchedule::default(),
            enumerate: EnumerationOptions::default(),
            benchmarks: Vec::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// A benchmark with its model loaded.
#[derive(Debug, Clone)]
pub struct ResolvedBenchmark {
    pub name: String,
    pub graph: CausalGraph,
    pub scm: Scm,
    pub objective: Objective,
    pub mu_star: Option<f64>,
    pub scopes: Option<ScopeSource>,
    pub pomis: Option<ScopeSource>,
    pub cobo_scope: Option<ScopeSource>,
}

impl GridConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<GridConfig, ConfigError> {
        let mut cfg: GridConfig = toml::from_str(text)
            .map_err(|source| ConfigError::Toml { path: PathBuf::from("<config>"), source })?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<GridConfig, ConfigError> {
        let text = read(path)?;
        let mut cfg: GridConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.to_path_buf(), source })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let seeds = self.seeds.indices();
        if seeds.is_empty() {
            return Err(ConfigError::Invalid("seed list is empty".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("seed list has duplicates".into()));
        }
        if self.iterations == 0 {
            return Err(ConfigError::Invalid("iterations must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.optimizers.is_empty() {
            return Err(ConfigError::Invalid("no optimizers listed".into()));
        }
        if self.optimizers.iter().enumerate().any(|(i, k)| self.optimizers[..i].contains(k)) {
            return Err(ConfigError::Invalid("optimizer listed twice".into()));
        }
        if self.benchmarks.is_empty() {
            return Err(ConfigError::Invalid("no benchmarks listed".into()));
        }
        let mut names = Vec::new();
        for b in &self.benchmarks {
            let name = b.label()?;
            if names.contains(&name) {
                return Err(ConfigError::Invalid(format!("benchmark name `{name}` used twice")));
            }
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                return Err(ConfigError::Invalid(format!("benchmark name `{name}` is not a valid directory name")));
            }
            names.push(name);
        }
        // The core checks the remaining numeric settings per run; surface
        // them here so a bad file fails before any work starts.
        let probe = ExperimentConfig {
            iterations: self.iterations,
            cabo_epsilon: self.cabo_epsilon,
            bandit: self.bandit,
            suggest: self.acquisition,
            ..ExperimentConfig::for_benchmark(&builtin("toy").expect("toy builtin"), OptimizerKind::Cocabo)
        };
        probe.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn resolve_benchmarks(&self) -> Result<Vec<ResolvedBenchmark>, ConfigError> {
        self.benchmarks.iter().map(|b| b.resolve(&self.base_dir, &self.enumerate)).collect()
    }

    /// Settings of one run, before the seed is filled in.
    pub fn experiment(&self, b: &ResolvedBenchmark, kind: OptimizerKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(b.graph.clone(), b.scm.clone(), kind, b.objective);
        cfg.scopes = match kind {
            OptimizerKind::Cocabo => b.scopes.clone(),
            OptimizerKind::Cabo => b.pomis.clone(),
            OptimizerKind::Cobo => b.cobo_scope.clone(),
        };
        cfg.iterations = self.iterations;
        cfg.bandit = self.bandit;
        cfg.fit = self.gp;
        cfg.refit = self.refit;
        cfg.suggest = self.acquisition;
        cfg.cabo_epsilon = self.cabo_epsilon;
        cfg
    }
}

impl BenchmarkSpec {
    pub fn builtin(name: &str) -> BenchmarkSpec {
        BenchmarkSpec { builtin: Some(name.into()), ..BenchmarkSpec::default() }
    }

    pub fn label(&self) -> Result<String, ConfigError> {
        match (&self.name, &self.builtin) {
            (Some(n), _) => Ok(n.clone()),
            (None, Some(b)) => Ok(b.clone()),
            (None, None) => Err(ConfigError::Invalid("a user benchmark needs a `name`".into())),
        }
    }

    fn resolve(&self, base: &Path, enumerate: &EnumerationOptions) -> Result<ResolvedBenchmark, ConfigError> {
        let name = self.label()?;
        let fail = |message: String| ConfigError::Benchmark { name: name.clone(), message };
        let source = |spec: &Option<String>| -> Result<Option<ScopeSource>, ConfigError> {
            spec.as_deref().map(|s| scope_source(s, base, enumerate)).transpose()
        };
        if let Some(b) = &self.builtin {
            if self.graph.is_some() || self.scm.is_some() {
                return Err(fail("`builtin` cannot be combined with `graph` or `scm`".into()));
            }
            let bench = builtin(b).map_err(|e| fail(e.to_string()))?;
            if self.objective.is_some_and(|o| o != bench.objective) {
                return Err(fail("objective differs from the builtin's".into()));
            }
            return Ok(ResolvedBenchmark {
                name,
                objective: bench.objective,
                mu_star: Some(self.mu_star.unwrap_or(bench.optimal_value)),
                scopes: Some(match source(&self.scopes)? {
                    Some(s) => s,
                    None => ScopeSource::Fixture(bench.pomps.into()),
                }),
                pomis: match source(&self.pomis)? {
                    Some(s) => Some(s),
                    None => bench.pomis.map(|p| ScopeSource::Fixture(p.into())),
                },
                cobo_scope: source(&self.cobo_scope)?,
                graph: bench.graph,
                scm: bench.scm,
            });
        }
        let (Some(graph), Some(scm)) = (&self.graph, &self.scm) else {
            return Err(fail("needs either `builtin` or both `graph` and `scm`".into()));
        };
        let graph = parse_graph(&read(&base.join(graph))?).map_err(|e| fail(format!("graph: {e}")))?;
        let scm = parse_scm(&read(&base.join(scm))?).map_err(|e| fail(format!("scm: {e}")))?;
        if scm.target() != graph.target() {
            return Err(fail(format!(
                "model target `{}` differs from graph target `{}`",
                scm.target(),
                graph.target()
            )));
        }
        Ok(ResolvedBenchmark {
            name: name.clone(),
            objective: self.objective.unwrap_or(Objective::Maximise),
            mu_star: self.mu_star,
            scopes: source(&self.scopes)?,
            pomis: source(&self.pomis)?,
            cobo_scope: source(&self.cobo_scope)?,
            graph,
            scm,
        })
    }
}

/// `"fixture:<name>"`, `"enumerate"`, or a path to a scope file.
pub fn scope_source(spec: &str, base: &Path, enumerate: &EnumerationOptions) -> Result<ScopeSource, ConfigError> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return Ok(ScopeSource::Fixture(name.into()));
    }
    if spec == "enumerate" {
        return Ok(ScopeSource::Enumerate(*enumerate));
    }
    let path = base.join(spec);
    let scopes = parse_scopes(&read(&path)?)
        .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
    let set = ScopeSet::new(scopes, ScopeOrigin::User)
        .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(ScopeSource::Explicit(set))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_tables() {
        let cfg = GridConfig::from_toml(
            "seeds = 3\n[bandit]\nexploration_c = 2.0\n[[benchmarks]]\nbuiltin = \"toy\"\n",
            ".",
        )
        .unwrap();
        assert_eq!(cfg.seeds.indices(), [0, 1, 2]);
        assert_eq!(cfg.bandit.exploration_c, 2.0);
        assert_eq!(cfg.bandit.window, None);
        assert_eq!(cfg.iterations, 300);
        cfg.validate().unwrap();
        let b = cfg.resolve_benchmarks().unwrap();
        assert_eq!(b[0].mu_star, Some(1.0 / 3.0));
        assert!(matches!(b[0].scopes, Some(ScopeSource::Fixture(ref f)) if f == "toy_pomps"));
    }

    #[test]
    fn empty_seed_list_is_an_error() {
        let cfg = GridConfig::from_toml("seeds = []\n[[benchmarks]]\nbuiltin = \"toy\"\n", ".").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(m)) if m.contains("seed")));
        let cfg = GridConfig::from_toml("seeds = 0\n[[benchmarks]]\nbuiltin = \"toy\"\n", ".").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(GridConfig::from_toml("seeds = 2\nbogus = 1\n", ".").is_err());
        assert!(GridConfig::from_toml("optimizers = [\"bo\"]\n", ".").is_err());
        let no_bench = GridConfig::from_toml("seeds = 2\n", ".").unwrap();
        assert!(no_bench.validate().is_err());
        let twice = GridConfig::from_toml(
            "[[benchmarks]]\nbuiltin = \"toy\"\n[[benchmarks]]\nbuiltin = \"toy\"\n",
            ".",
        )
        .unwrap();
        assert!(twice.validate().is_err());
        let eps = GridConfig::from_toml("cabo_epsilon = 2.0\n[[benchmarks]]\nbuiltin = \"toy\"\n", ".").unwrap();
        assert!(eps.validate().is_err());
        let unknown = GridConfig::from_toml("[[benchmarks]]\nbuiltin = \"nope\"\n", ".").unwrap();
        assert!(unknown.resolve_benchmarks().is_err());
    }

    #[test]
    fn user_benchmarks_read_files_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("g.txt"), cocabo_core::fixtures::TOY_GRAPH).unwrap();
        fs::write(dir.path().join("m.txt"), cocabo_core::scm::TOY_SCM).unwrap();
        fs::write(dir.path().join("s.txt"), "pair X1 | C\n").unwrap();
        let text = "[[benchmarks]]\nname = \"mine\"\ngraph = \"g.txt\"\nscm = \"m.txt\"\nscopes = \"s.txt\"\n";
        let path = dir.path().join("grid.toml");
        fs::write(&path, text).unwrap();
        let cfg = GridConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        let b = &cfg.resolve_benchmarks().unwrap()[0];
        assert_eq!(b.mu_star, None);
        assert_eq!(b.objective, Objective::Maximise);
        let Some(ScopeSource::Explicit(set)) = &b.scopes else { panic!() };
        assert_eq!(set.canonical_names(), ["<X1|C>"]);
    }
}
