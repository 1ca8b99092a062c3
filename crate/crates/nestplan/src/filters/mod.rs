//! Belief filtering: the exact level-0 update with the other agent treated
//! as exogenous noise, a plain bootstrap filter over physical states, and
//! the recursive particle filter over interactive states.

pub mod grid;

use crate::error::{NestError, Result};
use crate::model::domain::joint_for;
use crate::model::frame::Frame;
use crate::model::particles::{
    normalize_weights, resample_unbiased, InteractiveParticle, OtherModel, ParticleSet,
    ResampleScheme,
};
use crate::planner::{other_action_dist, SolveCtx};
use crate::rng::RngStream;

/// Exact Bayes update of a level-0 belief: predict through the transition
/// with the other agent's action marginalized uniformly, weight by the
/// equally marginalized observation function, and normalize.
pub fn level0_update(b: &[f64], a_own: usize, o_own: usize, frame: &Frame) -> Result<Vec<f64>> {
    let d = &frame.domain;
    let ns = d.n_states();
    if b.len() != ns {
        return Err(NestError::DegenerateInput(format!(
            "belief has {} entries, domain has {ns} states",
            b.len()
        )));
    }
    let mut pred = vec![0.0; ns];
    for s in 0..ns {
        if b[s] == 0.0 {
            continue;
        }
        for (s2, &t) in d.marg_t_row(frame.agent, a_own, s).iter().enumerate() {
            pred[s2] += b[s] * t;
        }
    }
    let mut post: Vec<f64> = (0..ns)
        .map(|s2| pred[s2] * d.marg_o_row(frame.agent, a_own, s2)[o_own])
        .collect();
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return Err(NestError::InconsistentObservation);
    }
    for x in &mut post {
        *x /= total;
    }
    Ok(post)
}

/// Bootstrap filter over physical states with the other agent's action as
/// uniform noise: propagate each particle through the marginalized
/// transition, weight by the marginalized observation likelihood, resample.
pub fn bootstrap_filter(
    particles: &[usize],
    a_own: usize,
    o_own: usize,
    frame: &Frame,
    stream: &mut RngStream,
) -> Result<Vec<usize>> {
    if particles.is_empty() {
        return Err(NestError::DegenerateInput("empty particle set".into()));
    }
    let d = &frame.domain;
    let mut propagated = Vec::with_capacity(particles.len());
    let mut weights = Vec::with_capacity(particles.len());
    for &s in particles {
        let s2 = stream.sample_index(d.marg_t_row(frame.agent, a_own, s));
        propagated.push(s2);
        weights.push(d.marg_o_row(frame.agent, a_own, s2)[o_own]);
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(NestError::ParticleDepletion);
    }
    Ok((0..particles.len())
        .map(|_| propagated[stream.sample_index(&weights)])
        .collect())
}

/// One propagation pass of the recursive particle filter, before
/// normalization and resampling: each input particle spawns one child per
/// other-agent observation, weighted by the product of both agents'
/// observation likelihoods (scaled so a uniformly weighted input yields the
/// raw likelihood products). `other_horizon` is the planning horizon used
/// when solving the other agent's model for its action.
pub fn ipf_propagate(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    other_horizon: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<Vec<InteractiveParticle>> {
    if ps.particles.is_empty() {
        return Err(NestError::DegenerateInput("empty particle set".into()));
    }
    ps.check_levels()?;
    let other_frame = &ps.other_frame;
    let own = other_frame.agent.other();
    let d = &other_frame.domain;
    let no_other = d.n_obs(other_frame.agent);
    let n = ps.particles.len() as f64;
    let mut children = Vec::with_capacity(ps.particles.len() * no_other);
    for (idx, p) in ps.particles.iter().enumerate() {
        // the substream is derived only if a draw is actually needed:
        // exact level-0 updates and degenerate distributions consume none
        let mut sub: Option<RngStream> = None;
        let sample = |dist: &[f64], sub: &mut Option<RngStream>| -> usize {
            if let Some(i) = single_support(dist) {
                return i;
            }
            sub.get_or_insert_with(|| stream.child(&[idx as u64])).sample_index(dist)
        };
        let dist = match &p.other {
            OtherModel::Level0(_) => {
                other_action_dist(&p.other, other_frame, other_horizon, ctx, stream)?
            }
            OtherModel::Nested(_) => {
                let s = sub.get_or_insert_with(|| stream.child(&[idx as u64]));
                other_action_dist(&p.other, other_frame, other_horizon, ctx, &s.child(&[0]))?
            }
        };
        let a_other = sample(&dist, &mut sub);
        let (ai, aj) = joint_for(own, a_own, a_other);
        let s2 = sample(d.transition_row(ai, aj, p.state), &mut sub);
        let own_lik = d.obs_row(own, ai, aj, s2)[o_own];
        let other_orow = d.obs_row(other_frame.agent, ai, aj, s2);
        let scale = p.weight * n * own_lik;
        match &p.other {
            OtherModel::Level0(b) => {
                // one prediction pass shared by every observation branch
                let ns = d.n_states();
                let mut pred = vec![0.0; ns];
                for s in 0..ns {
                    if b[s] == 0.0 {
                        continue;
                    }
                    for (s2p, &t) in
                        d.marg_t_row(other_frame.agent, a_other, s).iter().enumerate()
                    {
                        pred[s2p] += b[s] * t;
                    }
                }
                for o_other in 0..no_other {
                    let mut post: Vec<f64> = (0..ns)
                        .map(|sp| {
                            pred[sp] * d.marg_o_row(other_frame.agent, a_other, sp)[o_other]
                        })
                        .collect();
                    let total: f64 = post.iter().sum();
                    let (other, w) = if total > 0.0 {
                        for x in &mut post {
                            *x /= total;
                        }
                        (OtherModel::Level0(post), scale * other_orow[o_other])
                    } else {
                        (p.other.clone(), 0.0)
                    };
                    children.push(InteractiveParticle { state: s2, other, weight: w });
                }
            }
            OtherModel::Nested(_) => {
                let s = sub.get_or_insert_with(|| stream.child(&[idx as u64]));
                for o_other in 0..no_other {
                    let (other, mut w) = update_other_model(
                        p, a_other, o_other, other_frame, other_horizon, ctx, s,
                    )?;
                    w *= scale * other_orow[o_other];
                    children.push(InteractiveParticle { state: s2, other, weight: w });
                }
            }
        }
    }
    Ok(children)
}

/// The unique support index of a distribution, if it has exactly one.
fn single_support(dist: &[f64]) -> Option<usize> {
    let mut found = None;
    for (i, &w) in dist.iter().enumerate() {
        if w > 0.0 {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        }
    }
    found
}

/// Update the other agent's model for its (sampled action, enumerated
/// observation). Exact at level 0; recursive filtering at level >= 2. An
/// inconsistent/depleted nested update zeroes the child instead of failing
/// the whole step.
fn update_other_model(
    p: &InteractiveParticle,
    a_other: usize,
    o_other: usize,
    other_frame: &Frame,
    other_horizon: usize,
    ctx: &mut SolveCtx,
    stream: &RngStream,
) -> Result<(OtherModel, f64)> {
    match &p.other {
        // computed directly: the exact two-table update is cheaper than a
        // memo lookup on a quantized-belief key
        OtherModel::Level0(b) => match level0_update(b, a_other, o_other, other_frame) {
            Ok(b2) => Ok((OtherModel::Level0(b2), 1.0)),
            Err(NestError::InconsistentObservation) => Ok((p.other.clone(), 0.0)),
            Err(e) => Err(e),
        },
        OtherModel::Nested(nested) => {
            let mut sub = stream.child(&[1, o_other as u64]);
            match ipf_step_with_horizon(nested, a_other, o_other, other_horizon, ctx, &mut sub) {
                Ok(updated) => Ok((OtherModel::Nested(Box::new(updated)), 1.0)),
                Err(NestError::ParticleDepletion) => Ok((p.other.clone(), 0.0)),
                Err(e) => Err(e),
            }
        }
    }
}

/// Full recursive filter step with an explicit other-agent planning horizon
/// and resampling scheme.
pub fn ipf_step_full(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    other_horizon: usize,
    scheme: ResampleScheme,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    // Level-1 sets take a fused path that defers materializing updated
    // level-0 beliefs until after resampling; it produces the same output
    // as propagate + normalize + resample for the same stream.
    if ps.level == 1 && scheme == ResampleScheme::Multinomial {
        return ipf_step_level1_fused(ps, a_own, o_own, other_horizon, ctx, stream);
    }
    let mut children = ipf_propagate(ps, a_own, o_own, other_horizon, ctx, stream)?;
    normalize_weights(&mut children)?;
    resample_unbiased(
        &children,
        ps.level,
        &ps.other_frame,
        ps.nominal_n,
        scheme,
        &mut stream.child(&[u64::MAX]),
    )
}

/// Fused step for level-1 particle sets: compute every child's importance
/// weight (which needs only the posterior's total mass, not the posterior
/// itself), resample child indices, and materialize the updated level-0
/// beliefs of the survivors only. Weight arithmetic, draw streams, and
/// output match the generic path exactly.
fn ipf_step_level1_fused(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    other_horizon: usize,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    if ps.particles.is_empty() {
        return Err(NestError::DegenerateInput("empty particle set".into()));
    }
    ps.check_levels()?;
    let other_frame = ps.other_frame.clone();
    let own = other_frame.agent.other();
    let d = other_frame.domain.clone();
    let ns = d.n_states();
    let no_other = d.n_obs(other_frame.agent);
    let n = ps.particles.len() as f64;

    // per-particle predicted other-belief and sampled (action, next state)
    let mut preds: Vec<Vec<f64>> = Vec::with_capacity(ps.particles.len());
    let mut moves: Vec<(usize, usize)> = Vec::with_capacity(ps.particles.len());
    let mut weights: Vec<f64> = Vec::with_capacity(ps.particles.len() * no_other);
    for (idx, p) in ps.particles.iter().enumerate() {
        let OtherModel::Level0(b) = &p.other else {
            return Err(NestError::LevelMismatch { expected: 1, found: ps.level });
        };
        let mut sub: Option<RngStream> = None;
        let sample = |dist: &[f64], sub: &mut Option<RngStream>| -> usize {
            if let Some(i) = single_support(dist) {
                return i;
            }
            sub.get_or_insert_with(|| stream.child(&[idx as u64])).sample_index(dist)
        };
        let dist = other_action_dist(&p.other, &other_frame, other_horizon, ctx, stream)?;
        let a_other = sample(&dist, &mut sub);
        let (ai, aj) = joint_for(own, a_own, a_other);
        let s2 = sample(d.transition_row(ai, aj, p.state), &mut sub);
        let own_lik = d.obs_row(own, ai, aj, s2)[o_own];
        let other_orow = d.obs_row(other_frame.agent, ai, aj, s2);
        let scale = p.weight * n * own_lik;
        let mut pred = vec![0.0; ns];
        for s in 0..ns {
            if b[s] == 0.0 {
                continue;
            }
            for (sp, &t) in d.marg_t_row(other_frame.agent, a_other, s).iter().enumerate() {
                pred[sp] += b[s] * t;
            }
        }
        for o_other in 0..no_other {
            let total: f64 = (0..ns)
                .map(|sp| pred[sp] * d.marg_o_row(other_frame.agent, a_other, sp)[o_other])
                .sum();
            weights.push(if total > 0.0 { scale * other_orow[o_other] } else { 0.0 });
        }
        preds.push(pred);
        moves.push((a_other, s2));
    }

    // normalize, then multinomial-resample indices exactly as the generic
    // path does over materialized children
    let raw_total: f64 = weights.iter().sum();
    if raw_total <= 0.0 {
        return Err(NestError::ParticleDepletion);
    }
    for w in &mut weights {
        *w /= raw_total;
    }
    let mut draw = stream.child(&[u64::MAX]);
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(NestError::ParticleDepletion);
    }
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in &weights {
        acc += w;
        cum.push(acc);
    }
    let out_n = ps.nominal_n;
    let uniform = 1.0 / out_n as f64;
    let mut out = Vec::with_capacity(out_n);
    for _ in 0..out_n {
        let u = draw.uniform() * total;
        let child = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        let (pidx, o_other) = (child / no_other, child % no_other);
        let (a_other, s2) = moves[pidx];
        let pred = &preds[pidx];
        let mut post: Vec<f64> = (0..ns)
            .map(|sp| pred[sp] * d.marg_o_row(other_frame.agent, a_other, sp)[o_other])
            .collect();
        let post_total: f64 = post.iter().sum();
        for x in &mut post {
            *x /= post_total;
        }
        out.push(InteractiveParticle {
            state: s2,
            other: OtherModel::Level0(post),
            weight: uniform,
        });
    }
    Ok(ParticleSet {
        level: ps.level,
        nominal_n: out_n,
        other_frame: ps.other_frame.clone(),
        particles: out,
    })
}

/// As `ipf_step_full` with multinomial resampling.
pub fn ipf_step_with_horizon(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    other_horizon: usize,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    ipf_step_full(ps, a_own, o_own, other_horizon, ResampleScheme::Multinomial, ctx, stream)
}

/// Recursive particle filter step: propagate every particle under the taken
/// action and received observation, enumerate the other agent's
/// observations, weight, normalize, and resample back to N particles. The
/// other agent plans with its frame's full horizon.
pub fn ipf_step(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    ipf_step_with_horizon(ps, a_own, o_own, ps.other_frame.horizon, ctx, stream)
}

/// Variant of `ipf_step` that samples the other agent's observation instead
/// of enumerating it: one child per particle, weighted only by the own
/// observation likelihood. Statistically equivalent in expectation, with an
/// extra layer of sampling noise at small N.
pub fn ipf_step_sampled_obs(
    ps: &ParticleSet,
    a_own: usize,
    o_own: usize,
    ctx: &mut SolveCtx,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    if ps.particles.is_empty() {
        return Err(NestError::DegenerateInput("empty particle set".into()));
    }
    ps.check_levels()?;
    let other_horizon = ps.other_frame.horizon;
    let other_frame = ps.other_frame.clone();
    let own = other_frame.agent.other();
    let d = other_frame.domain.clone();
    let n = ps.particles.len() as f64;
    let mut children = Vec::with_capacity(ps.particles.len());
    for (idx, p) in ps.particles.iter().enumerate() {
        let mut sub = stream.child(&[idx as u64]);
        let dist = other_action_dist(&p.other, &other_frame, other_horizon, ctx, &sub.child(&[0]))?;
        let a_other = sub.sample_index(&dist);
        let (ai, aj) = joint_for(own, a_own, a_other);
        let s2 = sub.sample_index(d.transition_row(ai, aj, p.state));
        let o_other = sub.sample_index(d.obs_row(other_frame.agent, ai, aj, s2));
        let (other, mut w) =
            update_other_model(p, a_other, o_other, &other_frame, other_horizon, ctx, &sub)?;
        w *= p.weight * n * d.obs_row(own, ai, aj, s2)[o_own];
        children.push(InteractiveParticle { state: s2, other, weight: w });
    }
    normalize_weights(&mut children)?;
    resample_unbiased(
        &children,
        ps.level,
        &ps.other_frame,
        ps.nominal_n,
        ResampleScheme::Multinomial,
        &mut stream.child(&[u64::MAX]),
    )
}

#[cfg(test)]
mod tests;
