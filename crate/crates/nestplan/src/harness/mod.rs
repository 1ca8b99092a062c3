//! Experiment drivers: episode simulation against a solved opponent,
//! filtering-convergence sweeps, anytime performance profiles, and runtime
//! benchmarks, all emitting deterministic CSV plus companion plot scripts.

pub mod config;

use std::sync::Arc;
use std::time::Instant;

use crate::domains::{builtin_domain, builtin_prior, load_domain, load_prior};
use crate::error::{NestError, Result};
use crate::filters::grid::{grid_update_level1, GridBelief};
use crate::filters::{ipf_step, level0_update};
use crate::model::domain::{Agent, Domain};
use crate::model::frame::Frame;
use crate::model::particles::{OtherModel, ParticleSet};
use crate::model::prior::{sample_initial_particles, NestedPrior};
use crate::planner::{
    approx_policy, other_action_dist, solve_level0_policy, PolicyNode, RtsConfig, SolveCtx,
};
use crate::rng::RngStream;

/// Shared experiment parameters; every field mirrors a CLI flag.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: String,
    pub domain_file: Option<String>,
    pub level: usize,
    pub prior: String,
    pub prior_file: Option<String>,
    pub particle_counts: Vec<usize>,
    pub grid: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub rts: RtsConfig,
    pub trials: usize,
    pub runs: usize,
    pub steps: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "tiger".into(),
            domain_file: None,
            level: 1,
            prior: String::new(),
            prior_file: None,
            particle_counts: vec![100, 1000],
            grid: 100,
            horizon: 2,
            gamma: 0.9,
            rts: RtsConfig::off(),
            trials: 10,
            runs: 100,
            steps: 3,
            reps: 5,
            master_seed: 0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.runs == 0 || self.reps == 0 {
            return Err(NestError::Config("trials, runs, and reps must be >= 1".into()));
        }
        if self.particle_counts.iter().any(|&n| n == 0) || self.particle_counts.is_empty() {
            return Err(NestError::Config("particle counts must be positive".into()));
        }
        Ok(())
    }

    pub fn load_domain(&self) -> Result<Arc<Domain>> {
        match &self.domain_file {
            Some(path) => Ok(Arc::new(load_domain(&std::fs::read_to_string(path)?)?)),
            None => Ok(Arc::new(builtin_domain(&self.domain)?)),
        }
    }

    /// The configured prior, defaulting to the domain's uniform level-1 or
    /// level-2 mixture prior by nesting level.
    pub fn load_prior(&self, domain: &Domain) -> Result<NestedPrior> {
        if let Some(path) = &self.prior_file {
            return load_prior(&std::fs::read_to_string(path)?, domain);
        }
        if !self.prior.is_empty() {
            return builtin_prior(&self.prior, domain);
        }
        let name = match (self.domain.as_str(), self.level) {
            (d, 1) if d.starts_with("tiger") => "tiger-l1-uniform",
            (d, 2) if d.starts_with("tiger") => "tiger-l2-mix",
            ("mm", 1) => "mm-l1-uniform",
            ("mm", 2) => "mm-l2-mix",
            ("uav", 1) => "uav-l1-uniform",
            _ => {
                return Err(NestError::Config(format!(
                    "no default prior for domain '{}' at level {}",
                    self.domain, self.level
                )))
            }
        };
        builtin_prior(name, domain)
    }

    pub fn frames(&self, domain: Arc<Domain>) -> Result<(Frame, Frame)> {
        let fi = Frame::new(Arc::clone(&domain), Agent::I, self.gamma, self.horizon)?;
        let fj = fi.other();
        Ok((fi, fj))
    }
}

/// First line of every emitted CSV: tool version, subcommand, hardware
/// string, and master seed.
pub fn csv_header(subcommand: &str, master_seed: u64) -> String {
    format!(
        "# nestplan {} {} {}-{} {}",
        env!("CARGO_PKG_VERSION"),
        subcommand,
        std::env::consts::OS,
        std::env::consts::ARCH,
        master_seed
    )
}

fn write_output(cfg: &ExperimentConfig, csv: &str, plot: Option<&str>) -> Result<()> {
    if let Some(path) = &cfg.out {
        std::fs::write(path, csv)?;
        if let Some(script) = plot {
            std::fs::write(format!("{path}.gp"), script)?;
        }
    }
    Ok(())
}

/// One simulated interaction between agent i (acting from a solved policy
/// tree) and agent j (acting from its sampled model, solved online).
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub states: Vec<usize>,
    pub actions_i: Vec<usize>,
    pub actions_j: Vec<usize>,
    pub obs_i: Vec<usize>,
    pub obs_j: Vec<usize>,
    pub rewards: Vec<f64>,
    pub total_discounted: f64,
    /// Steps where i fell off a partial tree and replanned from its
    /// filtered belief.
    pub replans: usize,
}

/// How agent i chooses actions during simulation.
pub enum SimPolicy<'a> {
    /// Descend a solved policy tree, replanning from the filtered belief
    /// when a partial tree lacks the (action, observation) branch.
    Tree { root: &'a PolicyNode, belief: ParticleSet, rts: &'a RtsConfig },
    /// Uniformly random actions (the profile baseline).
    Random,
}

/// Simulate one episode. The true state and j's model are the caller's
/// draw from i's prior; j acts by solving its own model with the remaining
/// horizon each step and updates its belief with what it observes.
pub fn simulate_episode(
    frame_i: &Frame,
    mut policy: SimPolicy,
    mut state: usize,
    mut j_model: OtherModel,
    horizon: usize,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<EpisodeRecord> {
    let d = frame_i.domain.clone();
    let frame_j = frame_i.other();
    let mut rec = EpisodeRecord {
        seed: stream.key(),
        states: vec![state],
        actions_i: Vec::new(),
        actions_j: Vec::new(),
        obs_i: Vec::new(),
        obs_j: Vec::new(),
        rewards: Vec::new(),
        total_discounted: 0.0,
        replans: 0,
    };
    let mut node_path: Vec<PolicyNode> = Vec::new();
    for t in 0..horizon {
        if d.is_absorbing(state) {
            break;
        }
        let mut step_stream = stream.child(&[t as u64]);
        let remaining = horizon - t;
        let a_i = match &policy {
            SimPolicy::Tree { root, .. } => {
                let node = node_path.last().map(|n| n as &PolicyNode).unwrap_or(root);
                step_stream.sample_index(&node.action_dist)
            }
            SimPolicy::Random => {
                let na = d.n_actions(Agent::I);
                step_stream.sample_index(&vec![1.0 / na as f64; na])
            }
        };
        let dist_j =
            other_action_dist(&j_model, &frame_j, remaining, ctx, &step_stream.child(&[1]))?;
        let a_j = step_stream.sample_index(&dist_j);
        let reward = d.reward(Agent::I, a_i, a_j, state);
        let s2 = step_stream.sample_index(d.transition_row(a_i, a_j, state));
        let o_i = step_stream.sample_index(d.obs_row(Agent::I, a_i, a_j, s2));
        let o_j = step_stream.sample_index(d.obs_row(Agent::J, a_i, a_j, s2));
        rec.total_discounted += frame_i.gamma.powi(t as i32) * reward;
        rec.rewards.push(reward);
        rec.actions_i.push(a_i);
        rec.actions_j.push(a_j);
        rec.obs_i.push(o_i);
        rec.obs_j.push(o_j);
        rec.states.push(s2);
        state = s2;

        // j's belief update with what j saw
        j_model = match j_model {
            OtherModel::Level0(b) => OtherModel::Level0(level0_update(&b, a_j, o_j, &frame_j)?),
            OtherModel::Nested(ps) => OtherModel::Nested(Box::new(ipf_step(
                &ps,
                a_j,
                o_j,
                ctx,
                &mut step_stream.child(&[2]),
            )?)),
        };

        // i descends its tree (or replans off a partial tree)
        if t + 1 < horizon {
            if let SimPolicy::Tree { root, belief, rts } = &mut policy {
                let updated = ipf_step(belief, a_i, o_i, ctx, &mut step_stream.child(&[3]))?;
                *belief = updated;
                let node = node_path.last().map(|n| n as &PolicyNode).unwrap_or(root);
                match node.children.get(&(a_i, o_i)) {
                    Some((_, child)) => node_path.push(child.clone()),
                    None => {
                        rec.replans += 1;
                        let (_, replanned) = approx_policy(
                            belief,
                            frame_i,
                            remaining - 1,
                            rts,
                            ctx,
                            &step_stream.child(&[4]),
                        )?;
                        node_path.push(replanned);
                    }
                }
            }
        }
    }
    Ok(rec)
}

/// The default scripted (own action, own observation label) sequence used
/// by filtering experiments, repeated cyclically up to the step budget.
pub fn default_sequence(domain: &Domain) -> Result<Vec<(usize, usize)>> {
    let pair = |a: &str, o: &str| -> Result<(usize, usize)> {
        Ok((
            domain
                .action_index(Agent::I, a)
                .ok_or_else(|| NestError::Config(format!("no action {a}")))?,
            domain
                .obs_index(Agent::I, o)
                .ok_or_else(|| NestError::Config(format!("no observation {o}")))?,
        ))
    };
    if domain.name.starts_with("tiger") {
        Ok(vec![pair("L", "GL_S")?, pair("L", "GL_S")?, pair("OR", "GL_S")?])
    } else if domain.name == "mm" {
        Ok(vec![pair("M", "ND")?])
    } else if domain.name == "uav" {
        Ok(vec![pair("listen", "TR")?])
    } else {
        Err(NestError::Config(format!(
            "no default action/observation sequence for domain '{}'",
            domain.name
        )))
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Filtering-convergence sweep: run the scripted sequence at each particle
/// count and seed, comparing the posterior to the grid baseline (level 1)
/// or to the largest-N run's physical marginal (level 2). Returns the CSV.
pub fn run_filter_experiment(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let domain = cfg.load_domain()?;
    let prior = cfg.load_prior(&domain)?;
    if prior.level() != cfg.level {
        return Err(NestError::LevelMismatch { expected: cfg.level, found: prior.level() });
    }
    let (frame_i, frame_j) = cfg.frames(Arc::clone(&domain))?;
    let seq: Vec<(usize, usize)> = default_sequence(&domain)?
        .into_iter()
        .cycle()
        .take(cfg.steps)
        .collect();
    let ns = domain.n_states();

    // Baseline posteriors per step.
    enum Baseline {
        Grid(Vec<GridBelief>),
        /// Physical-state marginals from the largest-N runs, per (trial, step).
        SelfConverged(Vec<Vec<Vec<f64>>>),
    }
    let mut ctx = SolveCtx::new();
    let baseline = if cfg.level == 1 {
        let mut gb = GridBelief::from_prior(&prior, frame_i.clone(), cfg.grid)?;
        let mut steps = Vec::new();
        for &(a, o) in &seq {
            gb = grid_update_level1(&gb, a, o, cfg.horizon, &mut ctx)?;
            steps.push(gb.clone());
        }
        Baseline::Grid(steps)
    } else {
        let n_ref = *cfg.particle_counts.iter().max().unwrap();
        let mut per_trial = Vec::new();
        for trial in 0..cfg.trials {
            let stream =
                RngStream::from_seed(cfg.master_seed).child(&[9, trial as u64, n_ref as u64]);
            let mut ps = sample_initial_particles(&prior, &frame_j, n_ref, &stream.child(&[0]))?;
            let mut marginals = Vec::new();
            for (step, &(a, o)) in seq.iter().enumerate() {
                ps = ipf_step(&ps, a, o, &mut ctx, &mut stream.child(&[1 + step as u64]))?;
                marginals.push(ps.state_marginal());
            }
            per_trial.push(marginals);
        }
        Baseline::SelfConverged(per_trial)
    };

    let mut lines = vec![csv_header("filter", cfg.master_seed)];
    let marg_cols: Vec<String> = (0..ns).map(|s| format!("marginal_{}", domain.states[s])).collect();
    lines.push(format!(
        "step,n,seed,kl_to_baseline,tv_to_baseline,{},depletion,wall_time_ms",
        marg_cols.join(",")
    ));
    for &n in &cfg.particle_counts {
        for trial in 0..cfg.trials {
            let stream = RngStream::from_seed(cfg.master_seed).child(&[9, trial as u64, n as u64]);
            let t0 = Instant::now();
            let mut ps = sample_initial_particles(&prior, &frame_j, n, &stream.child(&[0]))?;
            for (step, &(a, o)) in seq.iter().enumerate() {
                let mut depleted = 0;
                match ipf_step(&ps, a, o, &mut ctx, &mut stream.child(&[1 + step as u64])) {
                    Ok(next) => ps = next,
                    Err(NestError::ParticleDepletion) => depleted = 1,
                    Err(e) => return Err(e),
                }
                let marginal = ps.state_marginal();
                let (kl, tv) = match &baseline {
                    Baseline::Grid(steps) => {
                        let gb = &steps[step];
                        let hist = gb.bin_particles(&ps)?;
                        (
                            crate::analysis::kl_divergence(&hist, gb.mass())?,
                            crate::analysis::tv_distance(&hist, gb.mass())?,
                        )
                    }
                    Baseline::SelfConverged(per_trial) => {
                        let reference = &per_trial[trial][step];
                        (
                            crate::analysis::kl_divergence(&marginal, reference)?,
                            crate::analysis::tv_distance(&marginal, reference)?,
                        )
                    }
                };
                let ms = t0.elapsed().as_secs_f64() * 1000.0;
                lines.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    step + 1,
                    n,
                    stream.key(),
                    fmt(kl),
                    fmt(tv),
                    marginal.iter().map(|&m| fmt(m)).collect::<Vec<_>>().join(","),
                    depleted,
                    fmt(ms)
                ));
                if depleted == 1 {
                    break;
                }
            }
        }
    }
    let csv = lines.join("\n") + "\n";
    write_output(cfg, &csv, Some(&filter_plot_script(cfg)))?;
    Ok(csv)
}

fn filter_plot_script(cfg: &ExperimentConfig) -> String {
    let data = cfg.out.as_deref().unwrap_or("filter.csv");
    format!(
        "set datafile separator ','\nset logscale x\nset xlabel 'particles'\n\
         set ylabel 'KL divergence (nats)'\nplot '{data}' every ::2 using 2:4 \
         title 'KL to baseline'\n"
    )
}

/// Summary of one profile configuration.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub n: usize,
    pub trial: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub random_mean: f64,
    pub wall_time_ms: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Anytime performance profile: for each particle count, build i's policy
/// `trials` times and evaluate each over `runs` episodes with the true
/// state and j's model drawn from i's prior; a uniform-random policy is
/// scored on the same episode draws as the baseline column.
pub fn run_profile_experiment(cfg: &ExperimentConfig) -> Result<(String, Vec<ProfilePoint>)> {
    cfg.validate()?;
    let domain = cfg.load_domain()?;
    let prior = cfg.load_prior(&domain)?;
    let (frame_i, frame_j) = cfg.frames(Arc::clone(&domain))?;
    let mut lines = vec![csv_header("profile", cfg.master_seed)];
    lines.push("n,trial,mean_reward,std_reward,random_mean,wall_time_ms".into());
    let mut points = Vec::new();
    for &n in &cfg.particle_counts {
        for trial in 0..cfg.trials {
            let stream =
                RngStream::from_seed(cfg.master_seed).child(&[7, n as u64, trial as u64]);
            let mut ctx = SolveCtx::new();
            let t0 = Instant::now();
            let ps = sample_initial_particles(&prior, &frame_j, n, &stream.child(&[0]))?;
            let (_, root) =
                approx_policy(&ps, &frame_i, cfg.horizon, &cfg.rts, &mut ctx, &stream.child(&[1]))?;
            let mut rewards = Vec::with_capacity(cfg.runs);
            let mut random_rewards = Vec::with_capacity(cfg.runs);
            for run in 0..cfg.runs {
                let run_stream = stream.child(&[2, run as u64]);
                // the episode's ground truth is one draw from i's prior
                let draw =
                    sample_initial_particles(&prior, &frame_j, 1, &run_stream.child(&[0]))?;
                let state = draw.particles[0].state;
                let j_model = draw.particles[0].other.clone();
                let rec = simulate_episode(
                    &frame_i,
                    SimPolicy::Tree { root: &root, belief: ps.clone(), rts: &cfg.rts },
                    state,
                    j_model.clone(),
                    cfg.horizon,
                    &mut ctx,
                    &mut run_stream.child(&[1]),
                )?;
                rewards.push(rec.total_discounted);
                let rand_rec = simulate_episode(
                    &frame_i,
                    SimPolicy::Random,
                    state,
                    j_model,
                    cfg.horizon,
                    &mut ctx,
                    &mut run_stream.child(&[2]),
                )?;
                random_rewards.push(rand_rec.total_discounted);
            }
            let (mean, std) = mean_std(&rewards);
            let (rand_mean, _) = mean_std(&random_rewards);
            let point = ProfilePoint {
                n,
                trial,
                mean_reward: mean,
                std_reward: std,
                random_mean: rand_mean,
                wall_time_ms: t0.elapsed().as_secs_f64() * 1000.0,
            };
            lines.push(format!(
                "{},{},{},{},{},{}",
                n,
                trial,
                fmt(mean),
                fmt(std),
                fmt(rand_mean),
                fmt(point.wall_time_ms)
            ));
            points.push(point);
        }
    }
    let csv = lines.join("\n") + "\n";
    let plot = format!(
        "set datafile separator ','\nset logscale x\nset xlabel 'particles'\n\
         set ylabel 'mean reward'\nplot '{}' every ::2 using 1:3 title 'policy', \
         '' every ::2 using 1:5 title 'random'\n",
        cfg.out.as_deref().unwrap_or("profile.csv")
    );
    write_output(cfg, &csv, Some(&plot))?;
    Ok((csv, points))
}

/// One timed row of the runtime benchmark.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub task: String,
    pub param: String,
    pub mean_s: f64,
    pub std_s: f64,
    pub reps: usize,
    /// Budget exceeded; timings are absent.
    pub starred: bool,
}

fn time_reps<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<(f64, f64)> {
    f()?; // warm-up, discarded
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        f()?;
        samples.push(t0.elapsed().as_secs_f64());
    }
    Ok(mean_std(&samples))
}

/// Runtime comparison: one filter step, particle vs grid representation at
/// matched N = G, and the planner with vs without observation sampling at
/// matched particles. Budget violations become starred rows.
pub fn run_runtime_benchmark(cfg: &ExperimentConfig) -> Result<(String, Vec<BenchRow>)> {
    cfg.validate()?;
    let domain = cfg.load_domain()?;
    let prior = cfg.load_prior(&domain)?;
    let (frame_i, frame_j) = cfg.frames(Arc::clone(&domain))?;
    let (a, o) = default_sequence(&domain)?[0];
    let n = cfg.particle_counts[0];
    let stream = RngStream::from_seed(cfg.master_seed).child(&[3]);
    let mut rows = Vec::new();

    let ps = sample_initial_particles(&prior, &frame_j, n, &stream.child(&[0]))?;
    let (m, s) = time_reps(cfg.reps, || {
        let mut ctx = SolveCtx::new();
        ipf_step(&ps, a, o, &mut ctx, &mut stream.child(&[1])).map(|_| ())
    })?;
    rows.push(BenchRow {
        task: "filter-step-particle".into(),
        param: format!("N={n}"),
        mean_s: m,
        std_s: s,
        reps: cfg.reps,
        starred: false,
    });

    if cfg.level == 1 {
        let gb = GridBelief::from_prior(&prior, frame_i.clone(), cfg.grid)?;
        let (m, s) = time_reps(cfg.reps, || {
            let mut ctx = SolveCtx::new();
            grid_update_level1(&gb, a, o, cfg.horizon, &mut ctx).map(|_| ())
        })?;
        rows.push(BenchRow {
            task: "filter-step-grid".into(),
            param: format!("G={}", cfg.grid),
            mean_s: m,
            std_s: s,
            reps: cfg.reps,
            starred: false,
        });
    }

    for (task, rts) in [
        ("plan-sampled-obs", cfg.rts.clone()),
        ("plan-full-obs", RtsConfig::off()),
    ] {
        if task == "plan-sampled-obs" && !cfg.rts.enabled {
            continue;
        }
        let result = time_reps(cfg.reps, || {
            let mut ctx = SolveCtx::new();
            approx_policy(&ps, &frame_i, cfg.horizon, &rts, &mut ctx, &stream.child(&[2]))
                .map(|_| ())
        });
        let row = match result {
            Ok((m, s)) => BenchRow {
                task: task.into(),
                param: format!("N={n},T={}", cfg.horizon),
                mean_s: m,
                std_s: s,
                reps: cfg.reps,
                starred: false,
            },
            Err(NestError::ResourceBudget(_)) => BenchRow {
                task: task.into(),
                param: format!("N={n},T={}", cfg.horizon),
                mean_s: f64::NAN,
                std_s: f64::NAN,
                reps: 0,
                starred: true,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }

    let mut lines = vec![csv_header("bench", cfg.master_seed)];
    lines.push("task,param,mean_s,std_s,reps".into());
    for r in &rows {
        if r.starred {
            lines.push(format!("{},{},*,*,*", r.task, r.param));
        } else {
            lines.push(format!(
                "{},{},{},{},{}",
                r.task,
                r.param,
                fmt(r.mean_s),
                fmt(r.std_s),
                r.reps
            ));
        }
    }
    let csv = lines.join("\n") + "\n";
    write_output(cfg, &csv, None)?;
    Ok((csv, rows))
}

/// Draw (true state, j's model) pairs and i's initial particle belief from
/// the prior, solve i's policy once, and simulate episodes. Used by the
/// `simulate` subcommand.
pub fn run_simulations(cfg: &ExperimentConfig) -> Result<(String, Vec<EpisodeRecord>)> {
    cfg.validate()?;
    let domain = cfg.load_domain()?;
    let prior = cfg.load_prior(&domain)?;
    let (frame_i, frame_j) = cfg.frames(Arc::clone(&domain))?;
    let n = cfg.particle_counts[0];
    let stream = RngStream::from_seed(cfg.master_seed).child(&[5]);
    let mut ctx = SolveCtx::new();
    let ps = sample_initial_particles(&prior, &frame_j, n, &stream.child(&[0]))?;
    let (_, root) =
        approx_policy(&ps, &frame_i, cfg.horizon, &cfg.rts, &mut ctx, &stream.child(&[1]))?;
    let mut lines = vec![csv_header("simulate", cfg.master_seed)];
    lines.push("run,seed,total_discounted,replans,actions_i,observations_i".into());
    let mut records = Vec::new();
    for run in 0..cfg.runs {
        let run_stream = stream.child(&[2, run as u64]);
        let draw = sample_initial_particles(&prior, &frame_j, 1, &run_stream.child(&[0]))?;
        let rec = simulate_episode(
            &frame_i,
            SimPolicy::Tree { root: &root, belief: ps.clone(), rts: &cfg.rts },
            draw.particles[0].state,
            draw.particles[0].other.clone(),
            cfg.horizon,
            &mut ctx,
            &mut run_stream.child(&[1]),
        )?;
        let acts: Vec<String> = rec
            .actions_i
            .iter()
            .map(|&a| domain.actions[0][a].clone())
            .collect();
        let obs: Vec<String> =
            rec.obs_i.iter().map(|&o| domain.observations[0][o].clone()).collect();
        lines.push(format!(
            "{},{},{},{},{},{}",
            run,
            rec.seed,
            fmt(rec.total_discounted),
            rec.replans,
            acts.join("|"),
            obs.join("|")
        ));
        records.push(rec);
    }
    let csv = lines.join("\n") + "\n";
    write_output(cfg, &csv, None)?;
    Ok((csv, records))
}

/// Expected value of j's level-0 policy solved from a vertex — exposed for
/// tests that need a quick sanity value.
pub fn level0_value(b: &[f64], frame: &Frame, horizon: usize) -> f64 {
    solve_level0_policy(b, frame, horizon, &mut SolveCtx::new()).1
}

#[cfg(test)]
mod tests;
