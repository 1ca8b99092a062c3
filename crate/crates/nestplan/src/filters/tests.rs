use std::sync::Arc;

use super::grid::{grid_update_level1, GridBelief};
use super::*;
use crate::analysis::tv_distance;
use crate::domains::{build_tiger, build_tiger_growl_only, builtin_prior};
use crate::model::domain::{Agent, Domain};
use crate::model::prior::sample_initial_particles;
use crate::planner::SolveCtx;

fn tiger_frame(agent: Agent, horizon: usize) -> Frame {
    Frame::new(Arc::new(build_tiger()), agent, 0.9, horizon).unwrap()
}

fn obs(d: &Domain, label: &str) -> usize {
    d.obs_index(Agent::I, label).unwrap()
}

const L: usize = 2;
const OL: usize = 0;

#[test]
fn level0_update_oracles() {
    let frame = tiger_frame(Agent::I, 1);
    let d = &frame.domain;
    let gl_s = obs(d, "GL_S");
    let b = level0_update(&[0.5, 0.5], L, gl_s, &frame).unwrap();
    assert!((b[0] - 0.85).abs() < 1e-9 && (b[1] - 0.15).abs() < 1e-9);

    let gr_s = obs(d, "GR_S");
    let b = level0_update(&[0.7, 0.3], L, gr_s, &frame).unwrap();
    assert!((b[0] - 0.1875).abs() < 1e-9 && (b[1] - 0.8125).abs() < 1e-9);

    // door opening resets the tiger and the observation is uninformative
    for o in 0..6 {
        for prior in [[0.9, 0.1], [0.2, 0.8]] {
            let b = level0_update(&prior, OL, o, &frame).unwrap();
            assert!((b[0] - 0.5).abs() < 1e-9);
        }
    }
}

#[test]
fn level0_update_inconsistent_observation() {
    // o2 is impossible in every state
    let o = vec![1.0, 0.0, 1.0, 0.0];
    let d = Domain::from_tables(
        "toy",
        vec!["A".into(), "B".into()],
        [vec!["x".into()], vec!["y".into()]],
        [vec!["o1".into(), "o2".into()], vec!["o1".into(), "o2".into()]],
        vec![1.0, 0.0, 0.0, 1.0],
        [o.clone(), o],
        [vec![0.0, 0.0], vec![0.0, 0.0]],
    );
    let frame = Frame::new(Arc::new(d), Agent::I, 0.9, 1).unwrap();
    assert!(matches!(
        level0_update(&[0.5, 0.5], 0, 1, &frame),
        Err(NestError::InconsistentObservation)
    ));
}

#[test]
fn bootstrap_point_mass_is_preserved() {
    let frame = tiger_frame(Agent::I, 1);
    let gl_s = obs(&frame.domain, "GL_S");
    let mut stream = RngStream::from_seed(11);
    let out = bootstrap_filter(&vec![0; 100], L, gl_s, &frame, &mut stream).unwrap();
    // <L,L> keeps the state and door-opening resets; only surviving
    // particles that stayed in TL carry GL weight dominance, but a pure
    // TL input under listening keeps some TL mass for sure
    assert_eq!(out.len(), 100);
}

#[test]
fn bootstrap_converges_to_exact_update() {
    let frame = tiger_frame(Agent::I, 1);
    let gl_s = obs(&frame.domain, "GL_S");
    let mut stream = RngStream::from_seed(23);
    let particles: Vec<usize> = (0..5000).map(|i| i % 2).collect();
    let out = bootstrap_filter(&particles, L, gl_s, &frame, &mut stream).unwrap();
    let frac_tl = out.iter().filter(|&&s| s == 0).count() as f64 / out.len() as f64;
    assert!((0.83..=0.87).contains(&frac_tl), "{frac_tl}");
}

#[test]
fn bootstrap_depletion() {
    let o = vec![1.0, 0.0, 1.0, 0.0];
    let d = Domain::from_tables(
        "toy",
        vec!["A".into(), "B".into()],
        [vec!["x".into()], vec!["y".into()]],
        [vec!["o1".into(), "o2".into()], vec!["o1".into(), "o2".into()]],
        vec![1.0, 0.0, 0.0, 1.0],
        [o.clone(), o],
        [vec![0.0, 0.0], vec![0.0, 0.0]],
    );
    let frame = Frame::new(Arc::new(d), Agent::I, 0.9, 1).unwrap();
    let mut stream = RngStream::from_seed(3);
    assert!(matches!(
        bootstrap_filter(&[0, 0, 0], 0, 1, &frame, &mut stream),
        Err(NestError::ParticleDepletion)
    ));
}

/// The worked two-particle example: i listens and hears a growl from the
/// left with silence; the four propagated children carry exact weights.
#[test]
fn two_particle_propagation_oracle() {
    let d = Arc::new(build_tiger_growl_only());
    let frame_j = Frame::new(Arc::clone(&d), Agent::J, 0.9, 1).unwrap();
    let ps = ParticleSet {
        level: 1,
        nominal_n: 2,
        other_frame: frame_j,
        particles: vec![
            InteractiveParticle {
                state: 0,
                other: OtherModel::Level0(vec![0.5, 0.5]),
                weight: 0.5,
            },
            InteractiveParticle {
                state: 1,
                other: OtherModel::Level0(vec![0.5, 0.5]),
                weight: 0.5,
            },
        ],
    };
    let gl_s = obs(&d, "GL_S");
    let mut ctx = SolveCtx::new();
    let stream = RngStream::from_seed(42);
    let children = ipf_propagate(&ps, L, gl_s, 1, &mut ctx, &stream).unwrap();
    assert_eq!(children.len(), 4);
    let expect = [0.65025, 0.11475, 0.02025, 0.11475];
    for (c, &e) in children.iter().zip(&expect) {
        assert!((c.weight - e).abs() < 1e-9, "weight {} vs {e}", c.weight);
    }
    // normalized physical marginal Pr(TL) = 0.85
    let total: f64 = children.iter().map(|c| c.weight).sum();
    let tl: f64 = children.iter().filter(|c| c.state == 0).map(|c| c.weight).sum();
    assert!((tl / total - 0.85).abs() < 1e-9);
    // the other agent's updated belief after hearing GL is 0.85
    let OtherModel::Level0(bj) = &children[0].other else { panic!() };
    assert!((bj[0] - 0.85).abs() < 1e-9);
}

fn uniform_l1_set(n: usize, seed: u64) -> ParticleSet {
    let d = Arc::new(build_tiger());
    let frame_j = Frame::new(d, Agent::J, 0.9, 1).unwrap();
    let prior = builtin_prior("tiger-l1-uniform", &frame_j.domain).unwrap();
    sample_initial_particles(&prior, &frame_j, n, &RngStream::from_seed(seed)).unwrap()
}

#[test]
fn ipf_step_shape_and_determinism() {
    let ps = uniform_l1_set(200, 5);
    let gl_s = obs(&ps.other_frame.domain, "GL_S");
    let run = || {
        let mut ctx = SolveCtx::new();
        let mut stream = RngStream::from_seed(99);
        ipf_step(&ps, L, gl_s, &mut ctx, &mut stream).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.particles.len(), 200);
    assert!(a.is_normalized());
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_eq!(a.state_marginal(), b.state_marginal());
}

#[test]
fn ipf_matches_grid_baseline_at_high_n() {
    let ps = uniform_l1_set(5000, 17);
    let d = ps.other_frame.domain.clone();
    let gl_s = obs(&d, "GL_S");
    let mut ctx = SolveCtx::new();
    let mut stream = RngStream::from_seed(4);
    let post = ipf_step(&ps, L, gl_s, &mut ctx, &mut stream).unwrap();

    let frame_i = Frame::new(d.clone(), Agent::I, 0.9, 1).unwrap();
    let prior = builtin_prior("tiger-l1-uniform", &d).unwrap();
    let gb = GridBelief::from_prior(&prior, frame_i, 200).unwrap();
    let gb_post = grid_update_level1(&gb, L, gl_s, 1, &mut ctx).unwrap();

    let tv = tv_distance(&post.state_marginal(), &gb_post.state_marginal()).unwrap();
    assert!(tv <= 0.05, "tv = {tv}");
}

#[test]
fn sampled_obs_variant_close_to_enumeration() {
    let ps = uniform_l1_set(5000, 29);
    let gl_s = obs(&ps.other_frame.domain, "GL_S");
    let mut ctx = SolveCtx::new();
    let enum_post =
        ipf_step(&ps, L, gl_s, &mut ctx, &mut RngStream::from_seed(8)).unwrap();
    let samp_post =
        ipf_step_sampled_obs(&ps, L, gl_s, &mut ctx, &mut RngStream::from_seed(9)).unwrap();
    assert_eq!(samp_post.particles.len(), 5000);
    let tv = tv_distance(&enum_post.state_marginal(), &samp_post.state_marginal()).unwrap();
    assert!(tv <= 0.03, "tv = {tv}");
}

/// With the other agent's policy degenerate to a uniform action
/// distribution (all rewards equal), the interactive filter's physical
/// marginal matches the bootstrap filter on the noise-marginalized dynamics.
#[test]
fn reduces_to_bootstrap_under_uniform_other_policy() {
    let base = build_tiger();
    let flat = Domain::from_tables(
        "tiger-flat",
        base.states.clone(),
        base.actions.clone(),
        base.observations.clone(),
        (0..3 * 3 * 2)
            .flat_map(|i| base.transition_row(i / 6, (i / 2) % 3, i % 2).to_vec())
            .collect(),
        [
            (0..3 * 3 * 2)
                .flat_map(|i| base.obs_row(Agent::I, i / 6, (i / 2) % 3, i % 2).to_vec())
                .collect(),
            (0..3 * 3 * 2)
                .flat_map(|i| base.obs_row(Agent::J, i / 6, (i / 2) % 3, i % 2).to_vec())
                .collect(),
        ],
        [vec![0.0; 18], vec![0.0; 18]],
    );
    let d = Arc::new(flat);
    let gl_s = d.obs_index(Agent::I, "GL_S").unwrap();
    let frame_i = Frame::new(Arc::clone(&d), Agent::I, 0.9, 1).unwrap();
    let frame_j = frame_i.other();
    let mut diffs = Vec::new();
    for seed in 0..20u64 {
        let n = 5000;
        let ps = ParticleSet {
            level: 1,
            nominal_n: n,
            other_frame: frame_j.clone(),
            particles: (0..n)
                .map(|i| InteractiveParticle {
                    state: i % 2,
                    other: OtherModel::Level0(vec![0.5, 0.5]),
                    weight: 1.0 / n as f64,
                })
                .collect(),
        };
        let mut ctx = SolveCtx::new();
        let mut s1 = RngStream::from_seed(1000 + seed);
        let ipf_marginal = ipf_step(&ps, L, gl_s, &mut ctx, &mut s1).unwrap().state_marginal();
        let particles: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut s2 = RngStream::from_seed(2000 + seed);
        let boot = bootstrap_filter(&particles, L, gl_s, &frame_i, &mut s2).unwrap();
        let frac_tl = boot.iter().filter(|&&s| s == 0).count() as f64 / n as f64;
        diffs.push((ipf_marginal[0] - frac_tl).abs());
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    assert!(mean <= 0.02, "mean marginal difference {mean}");
}

#[test]
fn level2_step_completes() {
    let d = Arc::new(build_tiger());
    let frame_j = Frame::new(Arc::clone(&d), Agent::J, 0.9, 1).unwrap();
    let prior = builtin_prior("tiger-l2-mix", &d).unwrap();
    let ps = sample_initial_particles(&prior, &frame_j, 50, &RngStream::from_seed(77)).unwrap();
    assert_eq!(ps.level, 2);
    let gl_s = d.obs_index(Agent::I, "GL_S").unwrap();
    let mut ctx = SolveCtx::new();
    let mut stream = RngStream::from_seed(78);
    let post = ipf_step(&ps, L, gl_s, &mut ctx, &mut stream).unwrap();
    assert_eq!(post.level, 2);
    assert_eq!(post.particles.len(), 50);
    post.check_levels().unwrap();
    assert!(ctx.other_solves > 0);
}

#[test]
fn grid_update_oracle_and_projection() {
    let d = Arc::new(build_tiger());
    let frame_i = Frame::new(Arc::clone(&d), Agent::I, 0.9, 1).unwrap();
    let gl_s = d.obs_index(Agent::I, "GL_S").unwrap();
    let prior = builtin_prior("tiger-l1-uniform", &d).unwrap();
    let gb = GridBelief::from_prior(&prior, frame_i.clone(), 100).unwrap();
    let mut ctx = SolveCtx::new();
    let post = grid_update_level1(&gb, L, gl_s, 1, &mut ctx).unwrap();
    let m = post.state_marginal();
    assert!((m[0] - 0.85).abs() < 1e-9, "{m:?}");

    // concentrated at TL, door opening resets the physical marginal
    let tl_prior = crate::model::prior::NestedPrior::Level1 {
        state_marginal: vec![1.0, 0.0],
        densities: vec![
            crate::model::prior::DensitySpec::Uniform,
            crate::model::prior::DensitySpec::Uniform,
        ],
    };
    let point = GridBelief::from_prior(&tl_prior, frame_i, 100).unwrap();
    let post = grid_update_level1(&point, OL, gl_s, 1, &mut ctx).unwrap();
    let m = post.state_marginal();
    assert!((m[0] - 0.5).abs() < 1e-9 && (m[1] - 0.5).abs() < 1e-9);
}

#[test]
fn grid_refinement_self_consistency() {
    let d = Arc::new(build_tiger());
    let frame_i = Frame::new(Arc::clone(&d), Agent::I, 0.9, 1).unwrap();
    let gl_s = d.obs_index(Agent::I, "GL_S").unwrap();
    let prior = builtin_prior("tiger-l1-uniform", &d).unwrap();
    let mut ctx = SolveCtx::new();
    let coarse = grid_update_level1(
        &GridBelief::from_prior(&prior, frame_i.clone(), 100).unwrap(),
        L,
        gl_s,
        1,
        &mut ctx,
    )
    .unwrap();
    let fine = grid_update_level1(
        &GridBelief::from_prior(&prior, frame_i, 1000).unwrap(),
        L,
        gl_s,
        1,
        &mut ctx,
    )
    .unwrap();
    // project the fine posterior onto the coarse lattice and compare
    let nv = coarse.n_vertices();
    let mut coarsened = vec![0.0; coarse.mass().len()];
    for (s, vtx, mass) in fine.cells() {
        for (k, frac) in coarse.project(fine.vertex(vtx)) {
            coarsened[s * nv + k] += mass * frac;
        }
    }
    let tv = tv_distance(coarse.mass(), &coarsened).unwrap();
    assert!(tv <= 0.02, "tv = {tv}");
}
