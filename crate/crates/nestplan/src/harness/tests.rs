use super::*;
use crate::planner::RtsConfig;

fn tiger_cfg() -> ExperimentConfig {
    ExperimentConfig {
        domain: "tiger".into(),
        level: 1,
        particle_counts: vec![50],
        grid: 50,
        horizon: 2,
        trials: 2,
        runs: 3,
        steps: 2,
        reps: 2,
        master_seed: 17,
        ..ExperimentConfig::default()
    }
}

#[test]
fn filter_experiment_is_deterministic_and_well_formed() {
    let cfg = tiger_cfg();
    let a = run_filter_experiment(&cfg).unwrap();
    let b = run_filter_experiment(&cfg).unwrap();
    // everything but the trailing wall-time column is deterministic
    let strip = |csv: &str| -> Vec<String> {
        csv.trim_end()
            .lines()
            .map(|l| l.rsplitn(2, ',').nth(1).unwrap_or(l).to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let lines: Vec<&str> = a.trim_end().lines().collect();
    assert!(lines[0].starts_with("# nestplan "));
    assert!(lines[1].starts_with("step,n,seed,"));
    // counts x trials x steps data rows
    assert_eq!(lines.len(), 2 + cfg.particle_counts.len() * cfg.trials * cfg.steps);
    for row in &lines[2..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 9, "{row}");
        let kl: f64 = cols[3].parse().unwrap();
        let tv: f64 = cols[4].parse().unwrap();
        assert!(kl >= 0.0 && tv >= 0.0 && tv <= 1.0);
        let m0: f64 = cols[5].parse().unwrap();
        let m1: f64 = cols[6].parse().unwrap();
        assert!((m0 + m1 - 1.0).abs() < 1e-3, "{row}");
    }
}

#[test]
fn filter_experiment_level2_uses_self_baseline() {
    let cfg = ExperimentConfig {
        level: 2,
        particle_counts: vec![20, 40],
        trials: 2,
        steps: 1,
        ..tiger_cfg()
    };
    let csv = run_filter_experiment(&cfg).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 2 + 2 * 2);
    // The largest count is compared to its own run: divergence exactly 0.
    for row in lines[2..].iter().filter(|r| r.split(',').nth(1) == Some("40")) {
        let kl: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(kl.abs() < 1e-12, "{row}");
    }
}

#[test]
fn profile_experiment_beats_random_on_tiger() {
    let cfg = ExperimentConfig {
        particle_counts: vec![200],
        trials: 2,
        runs: 40,
        ..tiger_cfg()
    };
    let (csv, points) = run_profile_experiment(&cfg).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("n,trial,"));
    assert_eq!(points.len(), 2);
    let mean: f64 = points.iter().map(|p| p.mean_reward).sum::<f64>() / points.len() as f64;
    let rand: f64 = points.iter().map(|p| p.random_mean).sum::<f64>() / points.len() as f64;
    assert!(
        mean > rand,
        "planned policy should outperform random: {mean} vs {rand}"
    );
}

#[test]
fn simulation_episodes_are_reproducible() {
    let cfg = ExperimentConfig { runs: 4, ..tiger_cfg() };
    let (csv_a, recs_a) = run_simulations(&cfg).unwrap();
    let (csv_b, recs_b) = run_simulations(&cfg).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(recs_a.len(), 4);
    for (a, b) in recs_a.iter().zip(&recs_b) {
        assert_eq!(a.actions_i, b.actions_i);
        assert_eq!(a.states, b.states);
        assert_eq!(a.total_discounted, b.total_discounted);
        assert_eq!(a.actions_i.len(), a.obs_i.len());
        assert_eq!(a.states.len(), a.actions_i.len() + 1);
    }
}

#[test]
fn benchmark_emits_grid_and_planner_rows() {
    let cfg = ExperimentConfig {
        rts: RtsConfig::fixed(2),
        particle_counts: vec![30],
        grid: 30,
        ..tiger_cfg()
    };
    let (csv, rows) = run_runtime_benchmark(&cfg).unwrap();
    let tasks: Vec<&str> = rows.iter().map(|r| r.task.as_str()).collect();
    assert!(tasks.contains(&"filter-step-particle"));
    assert!(tasks.contains(&"filter-step-grid"));
    assert!(tasks.contains(&"plan-sampled-obs"));
    assert!(tasks.contains(&"plan-full-obs"));
    assert!(rows.iter().all(|r| r.starred || r.mean_s >= 0.0));
    assert!(csv.lines().count() >= 2 + rows.len());
}

#[test]
fn default_sequences_resolve_for_builtin_domains() {
    for name in ["tiger", "mm", "uav"] {
        let d = builtin_domain(name).unwrap();
        let seq = default_sequence(&d).unwrap();
        assert!(!seq.is_empty());
        for (a, o) in seq {
            assert!(a < d.n_actions(Agent::I));
            assert!(o < d.n_obs(Agent::I));
        }
    }
}

#[test]
fn config_validation_rejects_degenerate_settings() {
    let mut cfg = tiger_cfg();
    cfg.trials = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = tiger_cfg();
    cfg.particle_counts = vec![0];
    assert!(cfg.validate().is_err());
}
