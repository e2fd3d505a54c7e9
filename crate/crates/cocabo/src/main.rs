use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cocabo::commands::{self, format_estimate};
use cocabo::config::{GridConfig, Seeds};
use cocabo::core::scm::builtin;
use cocabo::core::scope::EnumerationOptions;
use cocabo::grid::run_grid_with_progress;

#[derive(Parser)]
#[command(name = "cocabo", version, about = "Contextual causal Bayesian optimisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark x optimizer x seed grid.
    Run(RunArgs),
    /// Causal graph tools.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Structural model tools.
    Scm {
        #[command(subcommand)]
        command: ScmCommand,
    },
    /// Stored scope sets.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the seed count (indices 0..N).
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Worker threads; defaults to the config, then `COCABO_WORKERS`, then
    /// the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Print the enumerated scope set of a graph.
    Pomps {
        #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
        graph: Option<PathBuf>,
        /// Use a builtin benchmark's graph.
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value_t = EnumerationOptions::default().max_context)]
        max_context: usize,
        #[arg(long)]
        max_pairs: Option<usize>,
        /// Print scope-file text instead of canonical names.
        #[arg(long)]
        text: bool,
    },
}

#[derive(Subcommand)]
enum ScmCommand {
    /// Monte Carlo mean and standard error of the target under a policy.
    Check {
        #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
        scm: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
        /// Policy file: `pair X | C = <rule>` lines, or `passive`.
        #[arg(long, required_unless_present = "optimal", conflicts_with = "optimal")]
        policy: Option<PathBuf>,
        /// Use the builtin's closed-form optimal policy.
        #[arg(long, requires = "builtin")]
        optimal: bool,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    List,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cmd {
        Command::Run(args) => run(args),
        Command::Graph { command: GraphCommand::Pomps { graph, builtin: b, max_context, max_pairs, text } } => {
            let g = match (graph, b) {
                (Some(p), _) => commands::load_graph(&p)?,
                (None, Some(name)) => builtin(&name)?.graph,
                (None, None) => unreachable!("clap requires one of them"),
            };
            print!("{}", commands::graph_pomps(&g, EnumerationOptions { max_context, max_pairs }, text));
            Ok(ExitCode::SUCCESS)
        }
        Command::Scm { command: ScmCommand::Check { scm, builtin: b, policy, optimal, n, seed } } => {
            let e = commands::scm_check_command(scm.as_deref(), b.as_deref(), policy.as_deref(), optimal, n, seed)?;
            println!("{}", format_estimate(&e));
            Ok(ExitCode::SUCCESS)
        }
        Command::Fixtures { command: FixturesCommand::List } => {
            print!("{}", commands::fixtures_list()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut cfg = GridConfig::load(&args.config)?;
    if let Some(n) = args.seeds {
        cfg.seeds = Seeds::Count(n);
    }
    if let Some(t) = args.iters {
        cfg.iterations = t;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    let quiet = args.quiet;
    let report = run_grid_with_progress(&cfg, &args.out, &|line| {
        if !quiet {
            eprintln!("{line}");
        }
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for s in &report.summaries {
        let regret = match s.final_band() {
            Some(b) => format!("R̄_T = {:.4} [{:.4}, {:.4}]", b.mean, b.lo, b.hi),
            None => "R̄_T unavailable".into(),
        };
        println!("{}\t{}\t{} seeds\t{regret}", s.benchmark, s.optimizer, s.seeds.len());
    }
    for f in &report.failures {
        eprintln!("failed: {} {} seed {}: {}", f.benchmark, f.optimizer, f.seed_index, f.error);
    }
    Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
