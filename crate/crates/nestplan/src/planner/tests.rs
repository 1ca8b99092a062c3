use std::sync::Arc;

use super::*;
use crate::domains::{build_mm, build_tiger, builtin_prior};
use crate::filters::grid::GridBelief;
use crate::model::domain::{Agent, Domain};
use crate::model::particles::InteractiveParticle;
use crate::model::prior::sample_initial_particles;

const OL: usize = 0;
const OR: usize = 1;
const L: usize = 2;

fn tiger_frame(agent: Agent, horizon: usize) -> Frame {
    Frame::new(Arc::new(build_tiger()), agent, 0.9, horizon).unwrap()
}

#[test]
fn level0_horizon1_tiger() {
    let frame = tiger_frame(Agent::I, 1);
    let mut ctx = SolveCtx::new();
    let (dist, v) = solve_level0_policy(&[0.5, 0.5], &frame, 1, &mut ctx);
    assert_eq!(dist, vec![0.0, 0.0, 1.0]);
    assert!((v + 1.0).abs() < 1e-12);
    let values = level0_action_values(&[0.5, 0.5], &frame, 1, &mut ctx);
    assert!((values[OL] + 45.0).abs() < 1e-12);
    assert!((values[OR] + 45.0).abs() < 1e-12);
    assert!((values[L] + 1.0).abs() < 1e-12);
}

#[test]
fn level0_tiger_thresholds() {
    // V_OR(b) = 110 b - 100 meets V_L = -1 exactly at b = 0.9; by symmetry
    // V_OL meets it at b = 0.1.
    let frame = tiger_frame(Agent::I, 1);
    let mut ctx = SolveCtx::new();
    let mut policy = |b: f64| solve_level0_policy(&[b, 1.0 - b], &frame, 1, &mut ctx).0;
    assert_eq!(policy(0.9), vec![0.0, 0.5, 0.5]);
    assert_eq!(policy(0.1), vec![0.5, 0.0, 0.5]);
    for b in [0.100001, 0.3, 0.5, 0.7, 0.899999] {
        assert_eq!(policy(b), vec![0.0, 0.0, 1.0], "b = {b}");
    }
    assert_eq!(policy(0.95), vec![0.0, 1.0, 0.0]);
    assert_eq!(policy(0.05), vec![1.0, 0.0, 0.0]);
}

#[test]
fn level0_horizon1_mm() {
    let frame = Frame::new(Arc::new(build_mm()), Agent::I, 0.9, 1).unwrap();
    let mut ctx = SolveCtx::new();
    let values = level0_action_values(&[1.0, 0.0, 0.0], &frame, 1, &mut ctx);
    let expect = [0.66625, 0.41625, -0.73625, -2.23625];
    for (v, e) in values.iter().zip(&expect) {
        assert!((v - e).abs() < 1e-12, "{values:?}");
    }
    let (dist, v) = solve_level0_policy(&[1.0, 0.0, 0.0], &frame, 1, &mut ctx);
    assert_eq!(dist, vec![1.0, 0.0, 0.0, 0.0]);
    assert!((v - 0.66625).abs() < 1e-12);
}

#[test]
fn level0_reward_shift_invariance() {
    let base = build_tiger();
    let c = 7.25;
    let shifted = Domain::from_tables(
        "tiger-shift",
        base.states.clone(),
        base.actions.clone(),
        base.observations.clone(),
        (0..18).flat_map(|i| base.transition_row(i / 6, (i / 2) % 3, i % 2).to_vec()).collect(),
        [
            (0..18)
                .flat_map(|i| base.obs_row(Agent::I, i / 6, (i / 2) % 3, i % 2).to_vec())
                .collect(),
            (0..18)
                .flat_map(|i| base.obs_row(Agent::J, i / 6, (i / 2) % 3, i % 2).to_vec())
                .collect(),
        ],
        [
            (0..18).map(|i| base.reward(Agent::I, i / 6, (i / 2) % 3, i % 2) + c).collect(),
            (0..18).map(|i| base.reward(Agent::J, i / 6, (i / 2) % 3, i % 2) + c).collect(),
        ],
    );
    let f1 = tiger_frame(Agent::I, 3);
    let f2 = Frame::new(Arc::new(shifted), Agent::I, 0.9, 3).unwrap();
    let mut ctx = SolveCtx::new();
    for h in 1..=3usize {
        let offset = c * (1.0 - 0.9f64.powi(h as i32)) / (1.0 - 0.9);
        for b in [[0.5, 0.5], [0.85, 0.15], [0.2, 0.8]] {
            let v1 = level0_action_values(&b, &f1, h, &mut ctx);
            let v2 = level0_action_values(&b, &f2, h, &mut ctx);
            for (a, (x, y)) in v1.iter().zip(&v2).enumerate() {
                assert!((x + offset - y).abs() < 1e-9, "h={h} a={a}");
            }
            assert_eq!(opt_dist(&v1), opt_dist(&v2));
        }
    }
}

#[test]
fn opt_dist_properties() {
    assert_eq!(opt_dist(&[1.0, 2.0, 2.0]), vec![0.0, 0.5, 0.5]);
    assert_eq!(opt_dist(&[3.0, 2.0]), vec![1.0, 0.0]);
    // within tolerance counts as a tie
    assert_eq!(opt_dist(&[1.0, 1.0 - 1e-10]), vec![0.5, 0.5]);
    let d = opt_dist(&[0.3, 0.1, 0.3, 0.3]);
    assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn uniform_l1_set(n: usize, seed: u64) -> ParticleSet {
    let frame_j = tiger_frame(Agent::J, 1);
    let prior = builtin_prior("tiger-l1-uniform", &frame_j.domain).unwrap();
    sample_initial_particles(&prior, &frame_j, n, &RngStream::from_seed(seed)).unwrap()
}

#[test]
fn observation_likelihood_oracles() {
    let ps = {
        // uniform physical marginal, other agent's belief uniform so its
        // horizon-1 policy is pure listening
        let frame_j = tiger_frame(Agent::J, 1);
        ParticleSet {
            level: 1,
            nominal_n: 2,
            other_frame: frame_j,
            particles: (0..2)
                .map(|s| InteractiveParticle {
                    state: s,
                    other: OtherModel::Level0(vec![0.5, 0.5]),
                    weight: 0.5,
                })
                .collect(),
        }
    };
    let d = ps.other_frame.domain.clone();
    let mut ctx = SolveCtx::new();
    let stream = RngStream::from_seed(1);
    let lik = observation_likelihood(&ps, L, 1, &mut ctx, &stream).unwrap();
    let idx = |name: &str| d.obs_index(Agent::I, name).unwrap();
    assert!((lik[idx("GL_S")] - 0.45).abs() < 1e-9, "{lik:?}");
    assert!((lik[idx("GR_S")] - 0.45).abs() < 1e-9);
    for o in ["GL_CL", "GL_CR", "GR_CL", "GR_CR"] {
        assert!((lik[idx(o)] - 0.025).abs() < 1e-9);
    }
    assert!((lik.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    // opening a door yields the uniform observation row
    let lik = observation_likelihood(&ps, OL, 1, &mut ctx, &stream).unwrap();
    for &p in &lik {
        assert!((p - 1.0 / 6.0).abs() < 1e-9);
    }
}

#[test]
fn observation_sampling_behavior() {
    let mut stream = RngStream::from_seed(12);
    // point mass
    let set = sample_observation_set(&[0.0, 1.0, 0.0], 5, &mut stream);
    assert_eq!(set, vec![(1, 1.0)]);
    // full coverage reproduces the distribution exactly
    let dist = [0.45, 0.45, 0.025, 0.025, 0.025, 0.025];
    let set = sample_observation_set(&dist, 10_000, &mut stream);
    assert_eq!(set.len(), 6);
    for (o, w) in set {
        assert!((w - dist[o]).abs() < 1e-12);
    }
    // single-draw selection frequency tracks the distribution
    let mut hits = 0;
    for _ in 0..1000 {
        let set = sample_observation_set(&dist, 1, &mut stream);
        assert_eq!(set.len(), 1);
        if set[0].0 == 0 {
            hits += 1;
        }
    }
    let freq = hits as f64 / 1000.0;
    let sigma = (0.45f64 * 0.55 / 1000.0).sqrt();
    assert!((freq - 0.45).abs() < 3.0 * sigma, "freq = {freq}");
}

#[test]
fn approx_policy_horizon1_oracles() {
    let frame_i = tiger_frame(Agent::I, 1);
    let mut ctx = SolveCtx::new();
    let stream = RngStream::from_seed(3);

    let ps = uniform_l1_set(200, 6);
    let (dist, node) =
        approx_policy(&ps, &frame_i, 1, &RtsConfig::off(), &mut ctx, &stream).unwrap();
    assert_eq!(dist, vec![0.0, 0.0, 1.0]);
    assert!((node.value + 1.0).abs() < 1e-9);

    // all particles at TL: open the right door for +10 regardless of j
    let frame_j = tiger_frame(Agent::J, 1);
    let tl = ParticleSet {
        level: 1,
        nominal_n: 50,
        other_frame: frame_j,
        particles: (0..50)
            .map(|_| InteractiveParticle {
                state: 0,
                other: OtherModel::Level0(vec![0.5, 0.5]),
                weight: 0.02,
            })
            .collect(),
    };
    let (dist, node) =
        approx_policy(&tl, &frame_i, 1, &RtsConfig::off(), &mut ctx, &stream).unwrap();
    assert_eq!(dist, vec![0.0, 1.0, 0.0]);
    assert!((node.value - 10.0).abs() < 1e-9);
}

fn assert_trees_equal(a: &PolicyNode, b: &PolicyNode) {
    assert_eq!(a.action_dist, b.action_dist);
    assert_eq!(a.action_values, b.action_values);
    assert_eq!(a.value, b.value);
    let ka: Vec<_> = a.children.keys().collect();
    let kb: Vec<_> = b.children.keys().collect();
    assert_eq!(ka, kb);
    for (k, (wa, ca)) in &a.children {
        let (wb, cb) = &b.children[k];
        assert!((wa - wb).abs() < 1e-15);
        assert_trees_equal(ca, cb);
    }
}

#[test]
fn full_coverage_sampling_is_lossless() {
    let frame_i = tiger_frame(Agent::I, 3);
    let ps = uniform_l1_set(40, 13);
    let stream = RngStream::from_seed(21);
    let mut ctx = SolveCtx::new();
    let (_, plain) =
        approx_policy(&ps, &frame_i, 3, &RtsConfig::off(), &mut ctx, &stream).unwrap();
    let mut ctx2 = SolveCtx::new();
    // enough draws that every observation with positive probability appears
    let (_, sampled) =
        approx_policy(&ps, &frame_i, 3, &RtsConfig::fixed(2000), &mut ctx2, &stream).unwrap();
    assert_trees_equal(&plain, &sampled);
}

#[test]
fn rts_prunes_branches() {
    let frame_i = tiger_frame(Agent::I, 3);
    let ps = uniform_l1_set(40, 14);
    let stream = RngStream::from_seed(22);
    let mut ctx = SolveCtx::new();
    let (_, full) =
        approx_policy(&ps, &frame_i, 3, &RtsConfig::off(), &mut ctx, &stream).unwrap();
    let mut ctx2 = SolveCtx::new();
    let (_, pruned) =
        approx_policy(&ps, &frame_i, 3, &RtsConfig::fixed(2), &mut ctx2, &stream).unwrap();
    assert!(pruned.node_count() < full.node_count());
    // per-action branch weights still sum to 1
    for a in 0..3 {
        let w: f64 = pruned
            .children
            .iter()
            .filter(|((ai, _), _)| *ai == a)
            .map(|(_, (w, _))| w)
            .sum();
        assert!((w - 1.0).abs() < 1e-9, "action {a} branch mass {w}");
    }
    // schedule lookup: 8 draws before depth 5, 6 after
    let rts = RtsConfig::tapered(8, 5, 6);
    assert_eq!(rts.draws_at(0), 8);
    assert_eq!(rts.draws_at(4), 8);
    assert_eq!(rts.draws_at(5), 6);
    assert_eq!(rts.draws_at(9), 6);
}

#[test]
fn value_sanity_and_determinism() {
    let frame_i = tiger_frame(Agent::I, 3);
    let ps = uniform_l1_set(60, 31);
    let run = || {
        let mut ctx = SolveCtx::new();
        approx_policy(&ps, &frame_i, 3, &RtsConfig::off(), &mut ctx, &RngStream::from_seed(5))
            .unwrap()
    };
    let (dist1, node1) = run();
    let (dist2, node2) = run();
    assert_eq!(dist1, dist2);
    assert_trees_equal(&node1, &node2);
    let (rmin, rmax) = frame_i.domain.reward_range();
    let geom = (1.0 - 0.9f64.powi(3)) / (1.0 - 0.9);
    assert!(node1.value >= rmin * geom - 1e-9);
    assert!(node1.value <= rmax * geom + 1e-9);
}

#[test]
fn solve_counter_monotone() {
    let frame_i = tiger_frame(Agent::I, 2);
    let stream = RngStream::from_seed(41);
    let count_l1 = |n: usize| {
        let ps = uniform_l1_set(n, 50);
        let mut ctx = SolveCtx::new();
        approx_policy(&ps, &frame_i, 2, &RtsConfig::off(), &mut ctx, &stream).unwrap();
        ctx.other_solves
    };
    let c10 = count_l1(10);
    let c100 = count_l1(100);
    assert!(c100 > c10, "{c10} vs {c100}");

    // level 2 requests strictly more model solves than level 1 at equal N
    let d = frame_i.domain.clone();
    let frame_j = tiger_frame(Agent::J, 1);
    let prior2 = builtin_prior("tiger-l2-mix", &d).unwrap();
    let ps2 = sample_initial_particles(&prior2, &frame_j, 10, &RngStream::from_seed(50)).unwrap();
    let mut ctx2 = SolveCtx::new();
    approx_policy(&ps2, &frame_i, 2, &RtsConfig::off(), &mut ctx2, &stream).unwrap();
    assert!(ctx2.other_solves > c10, "{} vs {c10}", ctx2.other_solves);
}

#[test]
fn grid_planner_oracles() {
    let d = Arc::new(build_tiger());
    let prior = builtin_prior("tiger-l1-uniform", &d).unwrap();
    let frame_i = Frame::new(Arc::clone(&d), Agent::I, 0.9, 1).unwrap();
    let gb = GridBelief::from_prior(&prior, frame_i, 50).unwrap();
    let mut ctx = SolveCtx::new();
    let (dist, v) = grid_plan_level1(&gb, 1, &mut ctx).unwrap();
    assert_eq!(dist, vec![0.0, 0.0, 1.0]);
    assert!((v + 1.0).abs() < 1e-9);

    // zero discount: horizon 2 root action equals the horizon 1 action
    let frame0 = Frame::new(Arc::clone(&d), Agent::I, 0.0, 2).unwrap();
    let gb0 = GridBelief::from_prior(&prior, frame0, 50).unwrap();
    let (d1, _) = grid_plan_level1(&gb0, 1, &mut ctx).unwrap();
    let (d2, _) = grid_plan_level1(&gb0, 2, &mut ctx).unwrap();
    assert_eq!(d1, d2);
}

#[test]
fn grid_planner_refinement_and_budget() {
    let d = Arc::new(build_tiger());
    let prior = builtin_prior("tiger-l1-uniform", &d).unwrap();
    let frame_i = Frame::new(Arc::clone(&d), Agent::I, 0.9, 2).unwrap();
    let mut ctx = SolveCtx::new();
    let v60 = grid_plan_level1(
        &GridBelief::from_prior(&prior, frame_i.clone(), 60).unwrap(),
        2,
        &mut ctx,
    )
    .unwrap()
    .1;
    let v120 = grid_plan_level1(
        &GridBelief::from_prior(&prior, frame_i.clone(), 120).unwrap(),
        2,
        &mut ctx,
    )
    .unwrap()
    .1;
    assert!((v60 - v120).abs() <= 0.1, "{v60} vs {v120}");

    let mut tight = SolveCtx::with_node_budget(3);
    let err = grid_plan_level1(
        &GridBelief::from_prior(&prior, frame_i, 60).unwrap(),
        3,
        &mut tight,
    )
    .unwrap_err();
    assert!(matches!(err, NestError::ResourceBudget(_)));
}

#[test]
fn marginal_reward_table_matches_direct_average() {
    for d in [build_tiger(), build_mm()] {
        let d = Arc::new(d);
        for agent in [Agent::I, Agent::J] {
            let frame = Frame::new(Arc::clone(&d), agent, 0.9, 1).unwrap();
            for a in 0..d.n_actions(agent) {
                for s in 0..d.n_states() {
                    let direct = mean_reward_reference(&frame, a, s);
                    let table = d.marg_reward(agent, a, s);
                    assert!((direct - table).abs() < 1e-12, "{agent:?} a{a} s{s}");
                }
            }
        }
    }
}
