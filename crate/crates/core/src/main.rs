use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leafgrid::harness::experiment::{run_experiment, ExperimentConfig};
use leafgrid::harness::files::{read_samples_file, topology_to_text, write_samples_file};
use leafgrid::harness::generate::{generate_instance, GeneratorParams};
use leafgrid::harness::gridfile::GridFile;
use leafgrid::harness::metrics::fractional_error;
use leafgrid::moments::{analytic_phi_matrix, empirical_phi};
use leafgrid::oracle::{corrupted_impedance_check, theorem_sweep};
use leafgrid::powerflow::sample_voltages;
use leafgrid::{learn_topology, Error, InjectionDistribution, LearnerConfig, MatchRule, NodeId, Problem};

#[derive(Parser)]
#[command(name = "leafgrid", version, about = "Learn radial grid topology from terminal voltage statistics")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the operational lines of a grid file form an identifiable radial tree
    Validate {
        #[arg(long)]
        grid: PathBuf,
    },
    /// Draw voltage samples at the terminal nodes
    Simulate {
        #[arg(long)]
        grid: PathBuf,
        /// Number of samples
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        distribution: InjectionDistribution,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the operational tree from samples or exact moments
    Learn(LearnArgs),
    /// Sweep sample counts and tolerances, write the error curve as CSV
    Experiment(ExperimentArgs),
    /// Run the closed-form identity sweep
    Oracle {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        min_nodes: usize,
        #[arg(long, default_value_t = 40)]
        max_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a random grid file
    Generate {
        #[arg(long, default_value_t = 12)]
        leaves: usize,
        #[arg(long, default_value_t = 8)]
        intermediates: usize,
        #[arg(long, default_value_t = 30)]
        extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Sample CSV (header of node ids, one row per observation)
    #[arg(long, conflicts_with = "analytic", required_unless_present = "analytic")]
    samples: Option<PathBuf>,
    /// Use exact moments computed from the grid file
    #[arg(long)]
    analytic: bool,
    #[arg(long, default_value_t = 1e-8)]
    tau1: f64,
    #[arg(long, default_value_t = 1e-8)]
    tau2: f64,
    #[arg(long, default_value = "min-residual")]
    match_rule: MatchRule,
    /// Topology file; printed to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    m_list: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "1e-4")]
    tau1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-4")]
    tau2: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "gaussian")]
    distribution: InjectionDistribution,
    #[arg(long, default_value = "min-residual")]
    match_rule: MatchRule,
    #[arg(long)]
    analytic: bool,
    /// Fill the runtime_ms column (otherwise 0)
    #[arg(long)]
    record_runtime: bool,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Lib(Error),
    Check(&'static str, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error[{}]: {e}", e.category());
            if let Error::InvalidTree(vs) = &e {
                for v in vs {
                    eprintln!("violation[{}]: {v}", v.category());
                }
            }
            ExitCode::FAILURE
        }
        Err(Failure::Check(cat, msg)) => {
            eprintln!("error[{cat}]: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { grid } => {
            let g = GridFile::read(&grid)?;
            let t = g.tree()?;
            println!(
                "valid: {} nodes, {} leaves, {} missing, {} candidate lines",
                t.node_count(),
                t.leaves().len(),
                t.missing().len(),
                g.edges().len()
            );
        }
        Command::Simulate {
            grid,
            m,
            seed,
            distribution,
            out,
        } => {
            let g = GridFile::read(&grid)?;
            let tree = g.tree()?;
            let s = sample_voltages(&tree, &g.injection_stats()?, m, seed, &g.leaves(), distribution)?;
            write_samples_file(&s, &out)?;
        }
        Command::Learn(a) => learn(a)?,
        Command::Experiment(a) => {
            let mut cfg = ExperimentConfig::new(a.grid);
            cfg.sample_counts = a.m_list;
            cfg.trials = a.trials;
            cfg.tau1 = a.tau1;
            cfg.tau2 = a.tau2;
            cfg.seed = a.seed;
            cfg.distribution = a.distribution;
            cfg.match_rule = a.match_rule;
            cfg.analytic = a.analytic;
            cfg.record_runtime = a.record_runtime;
            cfg.out = Some(a.out);
            let curve = run_experiment(&cfg)?;
            for b in curve.best_tau_per_m() {
                let m = b.m.map_or_else(|| "inf".to_string(), |m| m.to_string());
                eprintln!(
                    "m={m} best tau1={:e} tau2={:e} mean_error={:.4} stderr={:.4} trials={}",
                    b.tau1, b.tau2, b.mean, b.stderr, b.trials
                );
            }
        }
        Command::Oracle {
            trials,
            min_nodes,
            max_nodes,
            seed,
        } => {
            let mut reports = theorem_sweep(trials, min_nodes..=max_nodes, seed)?;
            reports.push(corrupted_impedance_check(trials.min(20), min_nodes..=max_nodes, seed, 1.5)?);
            let mut failed = 0;
            for r in &reports {
                println!("{r}");
                failed += usize::from(!r.passed());
            }
            if failed > 0 {
                return Err(Failure::Check("OracleFailure", format!("{failed} checks failed")));
            }
        }
        Command::Generate {
            leaves,
            intermediates,
            extra,
            seed,
            out,
        } => {
            let g = generate_instance(GeneratorParams {
                n_leaves: leaves,
                n_intermediates: intermediates,
                extra_edges: extra,
                seed,
            })?;
            g.write(&out)?;
        }
    }
    Ok(())
}

fn learn(a: LearnArgs) -> Result<(), Failure> {
    let g = GridFile::read(&a.grid)?;
    let graph = g.graph()?;
    let stats = g.injection_stats()?;
    let leaves = g.leaves();
    let missing = g.missing();
    let phi = match &a.samples {
        Some(path) => {
            let s = read_samples_file(path)?;
            let cols: BTreeSet<NodeId> = s.observed().iter().copied().collect();
            if let Some(v) = leaves.iter().find(|v| !cols.contains(v)) {
                return Err(Error::Config(format!("sample file has no column for leaf {v}")).into());
            }
            empirical_phi(&s)?
        }
        None => {
            let tree = g.tree()?;
            let list: Vec<NodeId> = leaves.iter().copied().collect();
            analytic_phi_matrix(&tree, &stats, &list)?
        }
    };
    let cfg = LearnerConfig::new(a.tau1, a.tau2)?.with_match_rule(a.match_rule);
    let problem = Problem::new(&phi, &stats, &graph, &leaves, &missing)?;
    let learned = learn_topology(&problem, &cfg)?;
    let text = topology_to_text(&learned);
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    for (&(u, v), p) in &learned.edges {
        eprintln!("edge {u}-{v} stage={} residual={:e}", p.stage.name(), p.residual);
    }
    if let Ok(tree) = g.tree() {
        eprintln!("status={} frac_error={}", learned.status, fractional_error(&learned, &tree)?);
    }
    Ok(())
}
