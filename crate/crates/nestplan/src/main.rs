//! Command-line front end: domain inspection, belief filtering, planning,
//! episode simulation, experiment drivers, and sample-complexity bounds.

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use nestplan::analysis::{
    chernoff_epsilon, horizon_error_bound, particles_needed, BoundInputs,
};
use nestplan::domains::{builtin_domain, load_domain, serialize_domain};
use nestplan::error::{NestError, Result};
use nestplan::harness::config::KvConfig;
use nestplan::harness::{
    run_filter_experiment, run_profile_experiment, run_runtime_benchmark, run_simulations,
    ExperimentConfig,
};
use nestplan::model::{sample_initial_particles, validate_domain, Agent, Domain};
use nestplan::planner::{approx_policy, PolicyNode, RtsConfig, SolveCtx};
use nestplan::rng::RngStream;

#[derive(Parser)]
#[command(name = "nestplan", version, about = "Nested-belief planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every experiment subcommand. Unset flags fall back to
/// the config file, then to built-in defaults.
#[derive(Args, Clone, Default)]
struct Common {
    /// Key-value config file (`key = value`); flags override its entries
    #[arg(long)]
    config: Option<String>,
    /// Built-in domain name (tiger, tiger-growl-only, mm, uav)
    #[arg(long)]
    domain: Option<String>,
    /// Load the domain from a file instead of a built-in
    #[arg(long)]
    domain_file: Option<String>,
    /// Nesting level of the planning agent's belief (1 or 2)
    #[arg(long)]
    level: Option<usize>,
    /// Built-in prior name
    #[arg(long)]
    prior: Option<String>,
    /// Load the prior from a file
    #[arg(long)]
    prior_file: Option<String>,
    /// Particle counts to sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    particles: Option<Vec<usize>>,
    /// Grid resolution for the exact baseline
    #[arg(long)]
    grid: Option<usize>,
    /// Planning horizon
    #[arg(long)]
    horizon: Option<usize>,
    /// Discount factor in [0, 1)
    #[arg(long)]
    gamma: Option<f64>,
    /// Observation draws per tree node (0 disables sampling)
    #[arg(long)]
    obs_draws: Option<usize>,
    /// Depth at which the draw count switches
    #[arg(long)]
    obs_switch_depth: Option<usize>,
    /// Draw count from the switch depth onward
    #[arg(long)]
    obs_deep_draws: Option<usize>,
    /// Independent policy constructions per configuration
    #[arg(long)]
    trials: Option<usize>,
    /// Evaluation episodes per constructed policy
    #[arg(long)]
    runs: Option<usize>,
    /// Filter steps per trial
    #[arg(long)]
    steps: Option<usize>,
    /// Timed repetitions per benchmark row
    #[arg(long)]
    reps: Option<usize>,
    /// Master random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here (plot script goes to <out>.gp); stdout otherwise
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => KvConfig::parse(&std::fs::read_to_string(path)?)?,
            None => KvConfig::default(),
        };
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = file.get("domain") {
            cfg.domain = v.to_string();
        }
        if let Some(v) = file.get("domain_file") {
            cfg.domain_file = Some(v.to_string());
        }
        if let Some(v) = file.get_parse::<usize>("level")? {
            cfg.level = v;
        }
        if let Some(v) = file.get("prior") {
            cfg.prior = v.to_string();
        }
        if let Some(v) = file.get("prior_file") {
            cfg.prior_file = Some(v.to_string());
        }
        if let Some(v) = file.get_list::<usize>("particles")? {
            cfg.particle_counts = v;
        }
        if let Some(v) = file.get_parse::<usize>("grid")? {
            cfg.grid = v;
        }
        if let Some(v) = file.get_parse::<usize>("horizon")? {
            cfg.horizon = v;
        }
        if let Some(v) = file.get_parse::<f64>("gamma")? {
            cfg.gamma = v;
        }
        if let Some(v) = file.get_parse::<usize>("trials")? {
            cfg.trials = v;
        }
        if let Some(v) = file.get_parse::<usize>("runs")? {
            cfg.runs = v;
        }
        if let Some(v) = file.get_parse::<usize>("steps")? {
            cfg.steps = v;
        }
        if let Some(v) = file.get_parse::<usize>("reps")? {
            cfg.reps = v;
        }
        if let Some(v) = file.get_parse::<u64>("seed")? {
            cfg.master_seed = v;
        }
        if let Some(v) = file.get("out") {
            cfg.out = Some(v.to_string());
        }
        let file_draws = file.get_parse::<usize>("obs_draws")?;
        let file_switch = file.get_parse::<usize>("obs_switch_depth")?;
        let file_deep = file.get_parse::<usize>("obs_deep_draws")?;

        // flags override file entries
        if let Some(v) = &self.domain {
            cfg.domain = v.clone();
        }
        if let Some(v) = &self.domain_file {
            cfg.domain_file = Some(v.clone());
        }
        if let Some(v) = self.level {
            cfg.level = v;
        }
        if let Some(v) = &self.prior {
            cfg.prior = v.clone();
        }
        if let Some(v) = &self.prior_file {
            cfg.prior_file = Some(v.clone());
        }
        if let Some(v) = &self.particles {
            cfg.particle_counts = v.clone();
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        let draws = self.obs_draws.or(file_draws);
        let switch = self.obs_switch_depth.or(file_switch);
        let deep = self.obs_deep_draws.or(file_deep);
        cfg.rts = match (draws, switch, deep) {
            (None, _, _) | (Some(0), _, _) => RtsConfig::off(),
            (Some(n), Some(s), Some(d)) => RtsConfig::tapered(n, s, d),
            (Some(n), None, None) => RtsConfig::fixed(n),
            _ => {
                return Err(NestError::Config(
                    "obs_switch_depth and obs_deep_draws must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print or validate a domain definition
    Domain {
        #[command(flatten)]
        common: Common,
        /// Check table stochasticity and report violations instead of printing
        #[arg(long)]
        validate: bool,
    },
    /// Run the scripted filtering-convergence experiment (CSV)
    Filter {
        #[command(flatten)]
        common: Common,
    },
    /// Build a policy from the prior and print the root action values
    Plan {
        #[command(flatten)]
        common: Common,
        /// Also print the lookahead tree
        #[arg(long)]
        tree: bool,
    },
    /// Simulate episodes of a solved policy against the modeled agent (CSV)
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Reward-vs-particles performance profile (CSV)
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// Runtime comparison of filter and planner variants (CSV)
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Sample-complexity calculator: one-step and horizon error bounds
    Bound {
        /// Particle count N (exactly one of --n / --epsilon)
        #[arg(long)]
        n: Option<usize>,
        /// Target one-step error; solves for the particle count
        #[arg(long)]
        epsilon: Option<f64>,
        /// Failure probability
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Discount factor
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        /// Horizon
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        /// Reward range maximum
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        r_max: f64,
        /// Reward range minimum
        #[arg(long, default_value_t = -100.0, allow_negative_numbers = true)]
        r_min: f64,
    },
}

fn load_cfg_domain(cfg: &ExperimentConfig) -> Result<Arc<Domain>> {
    match &cfg.domain_file {
        Some(path) => Ok(Arc::new(load_domain(&std::fs::read_to_string(path)?)?)),
        None => Ok(Arc::new(builtin_domain(&cfg.domain)?)),
    }
}

fn print_tree(d: &Domain, node: &PolicyNode, indent: usize) {
    let pad = "  ".repeat(indent);
    let acts: Vec<&str> = node
        .action_dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(a, _)| d.actions[0][a].as_str())
        .collect();
    println!("{pad}value {:.4}  best {{{}}}", node.value, acts.join(", "));
    for (&(a, o), (w, child)) in &node.children {
        println!(
            "{pad}- after {} / {} (p={:.4}):",
            d.actions[0][a], d.observations[0][o], w
        );
        print_tree(d, child, indent + 1);
    }
}

fn emit(cfg: &ExperimentConfig, csv: &str) {
    if cfg.out.is_none() {
        print!("{csv}");
    } else {
        println!("wrote {}", cfg.out.as_deref().unwrap());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Domain { common, validate } => {
            let cfg = common.resolve()?;
            let d = load_cfg_domain(&cfg)?;
            if validate {
                let violations = validate_domain(&d);
                if violations.is_empty() {
                    println!("{}: ok", d.name);
                } else {
                    for v in &violations {
                        println!("{v}");
                    }
                    return Err(NestError::Validation(format!(
                        "{} violation(s)",
                        violations.len()
                    )));
                }
            } else {
                print!("{}", serialize_domain(&d));
            }
        }
        Command::Filter { common } => {
            let cfg = common.resolve()?;
            let csv = run_filter_experiment(&cfg)?;
            emit(&cfg, &csv);
        }
        Command::Plan { common, tree } => {
            let cfg = common.resolve()?;
            let d = load_cfg_domain(&cfg)?;
            let prior = cfg.load_prior(&d)?;
            let (frame_i, frame_j) = cfg.frames(Arc::clone(&d))?;
            let stream = RngStream::from_seed(cfg.master_seed).child(&[11]);
            let n = cfg.particle_counts[0];
            let ps = sample_initial_particles(&prior, &frame_j, n, &stream.child(&[0]))?;
            let mut ctx = SolveCtx::new();
            let (dist, root) =
                approx_policy(&ps, &frame_i, cfg.horizon, &cfg.rts, &mut ctx, &stream.child(&[1]))?;
            println!("domain {}  N {}  horizon {}  seed {}", d.name, n, cfg.horizon, cfg.master_seed);
            for a in 0..d.n_actions(Agent::I) {
                println!(
                    "{:>12}  value {:+.4}  p {:.4}",
                    d.actions[0][a], root.action_values[a], dist[a]
                );
            }
            println!("tree nodes: {}", root.node_count());
            if tree {
                print_tree(&d, &root, 0);
            }
        }
        Command::Simulate { common } => {
            let cfg = common.resolve()?;
            let (csv, records) = run_simulations(&cfg)?;
            emit(&cfg, &csv);
            let mean = records.iter().map(|r| r.total_discounted).sum::<f64>()
                / records.len() as f64;
            eprintln!("mean discounted reward over {} runs: {mean:.4}", records.len());
        }
        Command::Profile { common } => {
            let cfg = common.resolve()?;
            let (csv, _) = run_profile_experiment(&cfg)?;
            emit(&cfg, &csv);
        }
        Command::Bench { common } => {
            let cfg = common.resolve()?;
            let (csv, _) = run_runtime_benchmark(&cfg)?;
            emit(&cfg, &csv);
        }
        Command::Bound { n, epsilon, delta, gamma, horizon, r_max, r_min } => {
            let inputs = BoundInputs { delta, gamma, horizon, r_max, r_min };
            let rho = inputs.default_rho();
            let (n, eps) = match (n, epsilon) {
                (Some(n), None) => (n, chernoff_epsilon(n, delta, rho)?),
                (None, Some(e)) => (particles_needed(e, delta, rho)?, e),
                _ => {
                    return Err(NestError::Config(
                        "give exactly one of --n or --epsilon".into(),
                    ))
                }
            };
            let (bound, worst) = horizon_error_bound(&inputs, eps)?;
            println!("particles N          : {n}");
            println!("value range rho      : {rho:.4}");
            println!("one-step error eps   : {eps:.4}  (with prob {:.3})", 1.0 - delta);
            println!("horizon-{horizon} error bound: {bound:.4}");
            println!("trivial worst case   : {worst:.4}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
