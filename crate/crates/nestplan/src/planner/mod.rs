//! Finite-horizon planning: exact dynamic programming for level-0 models,
//! recursive approximate value iteration on particle sets at level >= 1, and
//! observation sampling for partial lookahead trees.

use std::collections::{BTreeMap, HashMap};

use crate::error::{NestError, Result};
use crate::filters;
use crate::model::domain::joint_for;
use crate::model::frame::Frame;
use crate::model::particles::{OtherModel, ParticleSet};
use crate::rng::RngStream;

/// Two action values tie when within this absolute tolerance.
pub const TIE_TOL: f64 = 1e-9;

/// Quantize a probability vector for use as a cache key.
pub(crate) fn quantize(b: &[f64]) -> Vec<u64> {
    b.iter().map(|&x| (x * 1e9).round() as u64).collect()
}

type FrameKey = (usize, u8, u64);

/// Shared memoization and instrumentation for one planning/filtering task.
/// Caches exact level-0 solves and updates (policies are piecewise constant
/// in belief, so hit rates are high) and nested particle-set solves
/// (resampling duplicates particles, making repeats common).
#[derive(Default)]
pub struct SolveCtx {
    level0_policy: HashMap<(FrameKey, usize, Vec<u64>), (Vec<f64>, Vec<f64>)>,
    level0_update: HashMap<(FrameKey, Vec<u64>, usize, usize), Option<Vec<f64>>>,
    nested_policy: HashMap<(FrameKey, usize, usize, u64), (Vec<f64>, f64)>,
    /// Count of other-agent model solves requested (cache hits included).
    pub other_solves: u64,
    /// Count of other-agent model solves actually computed.
    pub other_solve_misses: u64,
    /// Lookahead-tree nodes expanded (particle and grid planners).
    pub nodes_expanded: u64,
    /// Hard cap on expanded nodes; exceeding it aborts with a
    /// resource-budget error.
    pub node_budget: Option<u64>,
}

impl SolveCtx {
    pub fn new() -> SolveCtx {
        SolveCtx::default()
    }

    pub fn with_node_budget(budget: u64) -> SolveCtx {
        SolveCtx { node_budget: Some(budget), ..SolveCtx::default() }
    }

    fn charge_node(&mut self) -> Result<()> {
        self.nodes_expanded += 1;
        if let Some(budget) = self.node_budget {
            if self.nodes_expanded > budget {
                return Err(NestError::ResourceBudget(format!(
                    "lookahead tree exceeded {budget} nodes"
                )));
            }
        }
        Ok(())
    }

    /// Exact level-0 belief update, memoized by (frame, belief, action,
    /// observation). `None` marks an inconsistent observation.
    pub fn level0_update_cached(
        &mut self,
        b: &[f64],
        a_own: usize,
        o_own: usize,
        frame: &Frame,
    ) -> Option<Vec<f64>> {
        let key = (frame.cache_key(), quantize(b), a_own, o_own);
        if let Some(hit) = self.level0_update.get(&key) {
            return hit.clone();
        }
        let result = filters::level0_update(b, a_own, o_own, frame).ok();
        self.level0_update.insert(key, result.clone());
        result
    }
}

/// Uniform distribution over the actions within `TIE_TOL` of the best value.
pub fn opt_dist(values: &[f64]) -> Vec<f64> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let opt: Vec<bool> = values.iter().map(|&v| v >= best - TIE_TOL).collect();
    let k = opt.iter().filter(|&&x| x).count() as f64;
    opt.iter().map(|&x| if x { 1.0 / k } else { 0.0 }).collect()
}

/// Reward for taking `a_own` in `s` with the other agent's action
/// marginalized uniformly (the level-0 exogenous-noise reading).
fn mean_reward(frame: &Frame, a_own: usize, s: usize) -> f64 {
    frame.domain.marg_reward(frame.agent, a_own, s)
}

#[cfg(test)]
fn mean_reward_reference(frame: &Frame, a_own: usize, s: usize) -> f64 {
    let d = &frame.domain;
    let na_other = d.n_actions(frame.agent.other());
    (0..na_other)
        .map(|a_other| {
            let (ai, aj) = joint_for(frame.agent, a_own, a_other);
            d.reward(frame.agent, ai, aj, s)
        })
        .sum::<f64>()
        / na_other as f64
}

/// Exact finite-horizon values per action for a level-0 model, by dynamic
/// programming over the full reachability tree with noise-marginalized
/// dynamics.
pub fn level0_action_values(
    b: &[f64],
    frame: &Frame,
    horizon: usize,
    ctx: &mut SolveCtx,
) -> Vec<f64> {
    let key = (frame.cache_key(), horizon, quantize(b));
    if let Some((values, _)) = ctx.level0_policy.get(&key) {
        return values.clone();
    }
    let values = level0_values_uncached(b, frame, horizon, ctx);
    let dist = opt_dist(&values);
    ctx.level0_policy.insert(key, (values.clone(), dist));
    values
}

/// The dynamic-programming body of `level0_action_values`, without the
/// cache probe/insert for the root belief (recursive calls still hit the
/// cache). Callers that have already probed the cache use this to avoid
/// re-keying the belief.
fn level0_values_uncached(
    b: &[f64],
    frame: &Frame,
    horizon: usize,
    ctx: &mut SolveCtx,
) -> Vec<f64> {
    let d = frame.domain.clone();
    let ns = d.n_states();
    let na = d.n_actions(frame.agent);
    let no = d.n_obs(frame.agent);
    let mut values = Vec::with_capacity(na);
    for a in 0..na {
        let mut v: f64 = (0..ns).map(|s| b[s] * mean_reward(frame, a, s)).sum();
        if horizon > 1 {
            let mut pred = vec![0.0; ns];
            for s in 0..ns {
                if b[s] == 0.0 {
                    continue;
                }
                for (s2, &t) in d.marg_t_row(frame.agent, a, s).iter().enumerate() {
                    pred[s2] += b[s] * t;
                }
            }
            for o in 0..no {
                let mut post: Vec<f64> = (0..ns)
                    .map(|s2| pred[s2] * d.marg_o_row(frame.agent, a, s2)[o])
                    .collect();
                let pr_o: f64 = post.iter().sum();
                if pr_o <= 0.0 {
                    continue;
                }
                for x in &mut post {
                    *x /= pr_o;
                }
                let child = level0_action_values(&post, frame, horizon - 1, ctx);
                let vbest = child.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                v += frame.gamma * pr_o * vbest;
            }
        }
        values.push(v);
    }
    values
}

/// Exact finite-horizon policy for a level-0 model: uniform distribution
/// over the optimal action set, and the optimal value.
pub fn solve_level0_policy(
    b: &[f64],
    frame: &Frame,
    horizon: usize,
    ctx: &mut SolveCtx,
) -> (Vec<f64>, f64) {
    let values = level0_action_values(b, frame, horizon, ctx);
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (opt_dist(&values), best)
}

/// Predicted action distribution of the other agent given its model, at the
/// given remaining horizon. Level-0 models are solved exactly; nested
/// particle sets recursively via `approx_policy` (memoized by multiset
/// fingerprint).
pub fn other_action_dist(
    other: &OtherModel,
    other_frame: &Frame,
    horizon: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    ctx.other_solves += 1;
    match other {
        OtherModel::Level0(b) => {
            let key = (other_frame.cache_key(), horizon, quantize(b));
            if let Some((_, dist)) = ctx.level0_policy.get(&key) {
                return Ok(dist.clone());
            }
            ctx.other_solve_misses += 1;
            let values = level0_values_uncached(b, other_frame, horizon, ctx);
            let dist = opt_dist(&values);
            ctx.level0_policy.insert(key, (values, dist.clone()));
            Ok(dist)
        }
        OtherModel::Nested(ps) => {
            let key = (other_frame.cache_key(), ps.level, horizon, ps.fingerprint());
            if let Some((dist, _)) = ctx.nested_policy.get(&key) {
                return Ok(dist.clone());
            }
            ctx.other_solve_misses += 1;
            let (dist, node) =
                approx_policy(ps, other_frame, horizon, &RtsConfig::off(), ctx, stream)?;
            ctx.nested_policy.insert(key, (dist.clone(), node.value));
            Ok(dist)
        }
    }
}

/// Predicted own-observation distribution after taking `a_own` from the
/// belief held as a particle set: the mean over particles, other-agent
/// actions, and next states of T x O.
pub fn observation_likelihood(
    ps: &ParticleSet,
    a_own: usize,
    horizon: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    let dists = per_particle_other_dists(ps, horizon, ctx, stream)?;
    Ok(observation_likelihood_from(ps, &dists, a_own))
}

pub(crate) fn per_particle_other_dists(
    ps: &ParticleSet,
    horizon: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<Vec<Vec<f64>>> {
    ps.particles
        .iter()
        .enumerate()
        .map(|(n, p)| {
            other_action_dist(&p.other, &ps.other_frame, horizon, ctx, &stream.child(&[n as u64]))
        })
        .collect()
}

pub(crate) fn observation_likelihood_from(
    ps: &ParticleSet,
    other_dists: &[Vec<f64>],
    a_own: usize,
) -> Vec<f64> {
    let other_frame = &ps.other_frame;
    let own = other_frame.agent.other();
    let d = &other_frame.domain;
    let (ns, no) = (d.n_states(), d.n_obs(own));
    let total = ps.total_weight();
    let mut out = vec![0.0; no];
    for (p, dist) in ps.particles.iter().zip(other_dists) {
        for (a_other, &pa) in dist.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let (ai, aj) = joint_for(own, a_own, a_other);
            let trow = d.transition_row(ai, aj, p.state);
            for s2 in 0..ns {
                if trow[s2] == 0.0 {
                    continue;
                }
                let orow = d.obs_row(own, ai, aj, s2);
                let scale = p.weight / total * pa * trow[s2];
                for o in 0..no {
                    out[o] += scale * orow[o];
                }
            }
        }
    }
    out
}

/// Observation-branch sampling for partial lookahead trees: how many draws
/// to take per (node, action), optionally varying with tree depth.
#[derive(Debug, Clone)]
pub struct RtsConfig {
    pub enabled: bool,
    /// Default draw count when no schedule entry applies.
    pub draws: usize,
    /// (min depth, draws) thresholds; the entry with the greatest
    /// `min depth <= depth` wins. Must be sorted by depth.
    pub schedule: Vec<(usize, usize)>,
}

impl RtsConfig {
    pub fn off() -> RtsConfig {
        RtsConfig { enabled: false, draws: 0, schedule: Vec::new() }
    }

    pub fn fixed(draws: usize) -> RtsConfig {
        RtsConfig { enabled: true, draws, schedule: Vec::new() }
    }

    /// `draws` near the root, dropping to `deep_draws` from `switch_depth`
    /// onward.
    pub fn tapered(draws: usize, switch_depth: usize, deep_draws: usize) -> RtsConfig {
        RtsConfig { enabled: true, draws, schedule: vec![(switch_depth, deep_draws)] }
    }

    pub fn draws_at(&self, depth: usize) -> usize {
        let mut n = self.draws;
        for &(min_depth, draws) in &self.schedule {
            if depth >= min_depth {
                n = draws;
            }
        }
        n
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && (self.draws == 0 || self.schedule.iter().any(|&(_, n)| n == 0)) {
            return Err(NestError::Config(
                "observation sampling needs at least one draw per node".into(),
            ));
        }
        Ok(())
    }
}

/// Draw `n_draws` observations with replacement from `dist`, deduplicate,
/// and attach each distinct observation its true probability renormalized
/// over the distinct set. Full coverage therefore reproduces `dist` exactly.
pub fn sample_observation_set(
    dist: &[f64],
    n_draws: usize,
    stream: &mut RngStream,
) -> Vec<(usize, f64)> {
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..n_draws {
        seen.insert(stream.sample_index(dist));
    }
    let total: f64 = seen.iter().map(|&o| dist[o]).sum();
    seen.into_iter().map(|o| (o, dist[o] / total)).collect()
}

/// One node of a lookahead policy tree.
#[derive(Debug, Clone)]
pub struct PolicyNode {
    /// Uniform distribution over the optimal action set at this node.
    pub action_dist: Vec<f64>,
    /// Value of the best action.
    pub value: f64,
    /// Backed-up value per own action.
    pub action_values: Vec<f64>,
    /// Children keyed by (own action, own observation); the weight is the
    /// observation-branch probability (renormalized under sampling).
    pub children: BTreeMap<(usize, usize), (f64, PolicyNode)>,
}

impl PolicyNode {
    pub fn node_count(&self) -> usize {
        1 + self.children.values().map(|(_, c)| c.node_count()).sum::<usize>()
    }

    /// Best action by index, ties broken toward the lowest index.
    pub fn best_action(&self) -> usize {
        self.action_dist
            .iter()
            .position(|&p| p > 0.0)
            .unwrap_or(0)
    }
}

/// Approximate finite-horizon value iteration over a sampled interactive
/// belief: expands the reachability tree of particle sets under all own
/// actions and (all, or sampled) observations, solving the other agent's
/// model at every particle with horizon equal to the remaining horizon,
/// then backs values up the tree. Returns the root action distribution and
/// the full tree.
pub fn approx_policy(
    ps: &ParticleSet,
    frame: &Frame,
    horizon: usize,
    rts: &RtsConfig,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<(Vec<f64>, PolicyNode)> {
    if horizon == 0 {
        return Err(NestError::DegenerateInput("horizon must be >= 1".into()));
    }
    if ps.particles.is_empty() {
        return Err(NestError::DegenerateInput("empty particle set".into()));
    }
    if frame.agent == ps.other_frame.agent {
        return Err(NestError::Config(
            "particle set models the planning agent itself".into(),
        ));
    }
    rts.validate()?;
    ps.check_levels()?;
    let node = plan_node(ps, frame, horizon, rts, 0, ctx, stream)?;
    Ok((node.action_dist.clone(), node))
}

fn plan_node(
    ps: &ParticleSet,
    frame: &Frame,
    t: usize,
    rts: &RtsConfig,
    depth: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<PolicyNode> {
    ctx.charge_node()?;
    let d = frame.domain.clone();
    let na = d.n_actions(frame.agent);
    let total = ps.total_weight();
    // The other agent plans with the same remaining horizon.
    let dists = per_particle_other_dists(ps, t, ctx, &stream.child(&[1]))?;

    let mut action_values = Vec::with_capacity(na);
    let mut children = BTreeMap::new();
    for a in 0..na {
        // Immediate term: mean over particles of the reward against the
        // other agent's predicted action distribution.
        let mut v: f64 = ps
            .particles
            .iter()
            .zip(&dists)
            .map(|(p, dist)| {
                let er: f64 = dist
                    .iter()
                    .enumerate()
                    .map(|(a_other, &pa)| {
                        let (ai, aj) = joint_for(frame.agent, a, a_other);
                        pa * d.reward(frame.agent, ai, aj, p.state)
                    })
                    .sum();
                p.weight / total * er
            })
            .sum();
        if t > 1 {
            let obs_dist = observation_likelihood_from(ps, &dists, a);
            let branches: Vec<(usize, f64)> = if rts.enabled {
                let mut obs_stream = stream.child(&[2, a as u64]);
                // raw probabilities here; the shared renormalization over
                // expanded branches below makes full coverage bit-identical
                // to enumeration
                sample_observation_set(&obs_dist, rts.draws_at(depth), &mut obs_stream)
                    .into_iter()
                    .map(|(o, _)| (o, obs_dist[o]))
                    .collect()
            } else {
                obs_dist
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(o, &p)| (o, p))
                    .collect()
            };
            let mut expanded: Vec<(usize, f64, PolicyNode)> = Vec::new();
            for (o, w) in branches {
                let sub = stream.child(&[3, a as u64, o as u64]);
                let child_ps = match filters::ipf_step_with_horizon(
                    ps,
                    a,
                    o,
                    t,
                    ctx,
                    &mut sub.child(&[0]),
                ) {
                    Ok(c) => c,
                    // A branch can deplete even at positive predicted
                    // probability; drop it and renormalize the rest.
                    Err(NestError::ParticleDepletion) => continue,
                    Err(e) => return Err(e),
                };
                let child =
                    plan_node(&child_ps, frame, t - 1, rts, depth + 1, ctx, &sub.child(&[1]))?;
                expanded.push((o, w, child));
            }
            let covered: f64 = expanded.iter().map(|&(_, w, _)| w).sum();
            if covered > 0.0 {
                for (o, w, child) in expanded {
                    let w = w / covered;
                    v += frame.gamma * w * child.value;
                    children.insert((a, o), (w, child));
                }
            }
        }
        action_values.push(v);
    }
    let value = action_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(PolicyNode {
        action_dist: opt_dist(&action_values),
        value,
        action_values,
        children,
    })
}

/// Value iteration that is exact on the grid discretization: reachability
/// via the grid update over all (action, observation) pairs, rewards
/// integrated against grid mass. Refuses trees beyond the context's node
/// budget.
pub fn grid_plan_level1(
    gb: &crate::filters::grid::GridBelief,
    horizon: usize,
    ctx: &mut SolveCtx,
) -> Result<(Vec<f64>, f64)> {
    if horizon == 0 {
        return Err(NestError::DegenerateInput("horizon must be >= 1".into()));
    }
    let values = grid_plan_values(gb, horizon, ctx)?;
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((opt_dist(&values), best))
}

fn grid_plan_values(
    gb: &crate::filters::grid::GridBelief,
    t: usize,
    ctx: &mut SolveCtx,
) -> Result<Vec<f64>> {
    ctx.charge_node()?;
    let frame = gb.frame.clone();
    let other = frame.other();
    let d = frame.domain.clone();
    let na = d.n_actions(frame.agent);
    let no = d.n_obs(frame.agent);
    let ns = d.n_states();
    let mut values = Vec::with_capacity(na);
    for a in 0..na {
        let mut v = 0.0;
        let mut obs_prob = vec![0.0; no];
        for (s, vtx, mass) in gb.cells() {
            if mass == 0.0 {
                continue;
            }
            let dist = solve_level0_policy(gb.vertex(vtx), &other, t, ctx).0;
            ctx.other_solves += 1;
            for (a_other, &pa) in dist.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let (ai, aj) = joint_for(frame.agent, a, a_other);
                v += mass * pa * d.reward(frame.agent, ai, aj, s);
                if t > 1 {
                    let trow = d.transition_row(ai, aj, s);
                    for s2 in 0..ns {
                        if trow[s2] == 0.0 {
                            continue;
                        }
                        let orow = d.obs_row(frame.agent, ai, aj, s2);
                        for o in 0..no {
                            obs_prob[o] += mass * pa * trow[s2] * orow[o];
                        }
                    }
                }
            }
        }
        if t > 1 {
            for o in 0..no {
                if obs_prob[o] <= 0.0 {
                    continue;
                }
                let child = crate::filters::grid::grid_update_level1(gb, a, o, t, ctx)?;
                let child_values = grid_plan_values(&child, t - 1, ctx)?;
                let vbest = child_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                v += frame.gamma * obs_prob[o] * vbest;
            }
        }
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests;
