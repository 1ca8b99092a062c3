//! Built-in constructions of the three benchmark domains, the built-in
//! priors used by the experiment drivers, and the domain/prior file formats.

mod format;

pub use format::{load_domain, load_prior, serialize_domain};

use crate::error::{NestError, Result};
use crate::model::domain::{Agent, Domain};
use crate::model::prior::{DensitySpec, NestedPrior};

/// Multiagent tiger: two states, open-left / open-right / listen per agent,
/// six growl-and-creak observations per agent. Growl accuracy 0.85, creak
/// accuracy 0.9; any door opening relocates the tiger uniformly.
pub fn build_tiger() -> Domain {
    build_tiger_inner("tiger", false)
}

/// Tiger variant in which agent j observes growls only (GL / GR at
/// 0.85 / 0.15 while listening). Used by the two-particle worked example.
pub fn build_tiger_growl_only() -> Domain {
    build_tiger_inner("tiger-growl-only", true)
}

const GROWL_ACC: f64 = 0.85;
const CREAK_ACC: f64 = 0.9;

fn build_tiger_inner(name: &str, growl_only_j: bool) -> Domain {
    let states = vec!["TL".to_string(), "TR".to_string()];
    let acts: Vec<String> = ["OL", "OR", "L"].iter().map(|s| s.to_string()).collect();
    let full_obs: Vec<String> = ["GL_CL", "GL_CR", "GL_S", "GR_CL", "GR_CR", "GR_S"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let growl_obs: Vec<String> = ["GL", "GR"].iter().map(|s| s.to_string()).collect();
    let obs_j = if growl_only_j { growl_obs } else { full_obs.clone() };

    let listen = 2usize;

    // Transition: any door opening resets the tiger uniformly; <L,L> keeps it.
    let mut transition = Vec::new();
    for ai in 0..3 {
        for aj in 0..3 {
            for s in 0..2 {
                if ai == listen && aj == listen {
                    transition.extend(if s == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
                } else {
                    transition.extend([0.5, 0.5]);
                }
            }
        }
    }

    // growl likelihood for hearing GL given next state
    let growl = |s_next: usize| if s_next == 0 { GROWL_ACC } else { 1.0 - GROWL_ACC };
    // creak likelihood row (CL, CR, S) given the other agent's action
    let creak = |a_other: usize| match a_other {
        0 => [CREAK_ACC, 0.05, 0.05],
        1 => [0.05, CREAK_ACC, 0.05],
        _ => [0.05, 0.05, CREAK_ACC],
    };

    let obs_table = |agent: Agent, growl_only: bool| -> Vec<f64> {
        let no = if growl_only { 2 } else { 6 };
        let mut t = Vec::new();
        for ai in 0..3 {
            for aj in 0..3 {
                let (a_own, a_other) = match agent {
                    Agent::I => (ai, aj),
                    Agent::J => (aj, ai),
                };
                for s_next in 0..2 {
                    if a_own != listen {
                        t.extend(std::iter::repeat(1.0 / no as f64).take(no));
                        continue;
                    }
                    let g = growl(s_next);
                    if growl_only {
                        t.extend([g, 1.0 - g]);
                    } else {
                        let c = creak(a_other);
                        for gv in [g, 1.0 - g] {
                            for cv in c {
                                t.push(gv * cv);
                            }
                        }
                    }
                }
            }
        }
        t
    };

    // Rewards depend only on the agent's own action.
    let own_reward = |a_own: usize, s: usize| -> f64 {
        match (a_own, s) {
            (0, 0) => -100.0, // open left on tiger-left
            (0, 1) => 10.0,
            (1, 0) => 10.0,
            (1, 1) => -100.0,
            _ => -1.0,
        }
    };
    let reward_table = |agent: Agent| -> Vec<f64> {
        let mut t = Vec::new();
        for ai in 0..3 {
            for aj in 0..3 {
                let a_own = match agent {
                    Agent::I => ai,
                    Agent::J => aj,
                };
                for s in 0..2 {
                    t.push(own_reward(a_own, s));
                }
            }
        }
        t
    };

    Domain::from_tables(
        name,
        states,
        [acts.clone(), acts],
        [full_obs, obs_j],
        transition,
        [obs_table(Agent::I, false), obs_table(Agent::J, growl_only_j)],
        [reward_table(Agent::I), reward_table(Agent::J)],
    )
}

/// Two-agent machine maintenance: three failure states, actions
/// manufacture / examine / inspect / repair, two product observations.
pub fn build_mm() -> Domain {
    let states: Vec<String> = ["0-fail", "1-fail", "2-fail"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let acts: Vec<String> = ["M", "E", "I", "R"].iter().map(|s| s.to_string()).collect();
    let obs: Vec<String> = ["ND", "D"].iter().map(|s| s.to_string()).collect();
    let fixes = |a: usize| a >= 2; // I or R

    let mut transition = Vec::new();
    for ai in 0..4 {
        for aj in 0..4 {
            let repairing = fixes(ai) || fixes(aj);
            for s in 0..3 {
                let row: [f64; 3] = if repairing {
                    match s {
                        0 => [1.0, 0.0, 0.0],
                        1 => [0.95, 0.05, 0.0],
                        _ => [0.95, 0.0, 0.05],
                    }
                } else {
                    match s {
                        0 => [0.81, 0.18, 0.01],
                        1 => [0.0, 0.9, 0.1],
                        _ => [0.0, 0.0, 1.0],
                    }
                };
                transition.extend(row);
            }
        }
    }

    let obs_table = |agent: Agent| -> Vec<f64> {
        let mut t = Vec::new();
        for ai in 0..4 {
            for aj in 0..4 {
                let (a_own, a_other) = match agent {
                    Agent::I => (ai, aj),
                    Agent::J => (aj, ai),
                };
                for s_next in 0..3 {
                    let nd: f64 = if fixes(a_own) || fixes(a_other) {
                        0.95
                    } else if a_own == 0 {
                        0.5 // manufacture without examining
                    } else {
                        match s_next {
                            0 => 0.75,
                            1 => 0.5,
                            _ => 0.25,
                        }
                    };
                    t.extend([nd, 1.0 - nd]);
                }
            }
        }
        t
    };

    // Reward per (a_i, a_j) over states 0-fail, 1-fail, 2-fail; the table is
    // symmetric under swapping the two actions, so both agents share it.
    const MM_REWARD: [[f64; 3]; 16] = [
        [1.805, 0.95, 0.5],
        [1.555, 0.7, 0.25],
        [0.4025, -1.025, -2.25],
        [-1.0975, -1.525, -1.75],
        [1.555, 0.7, 0.25],
        [1.305, 0.45, 0.0],
        [0.1525, -1.275, -2.5],
        [-1.3475, -1.775, -2.0],
        [0.4025, -1.025, -2.25],
        [0.1525, -1.275, -2.5],
        [-1.0, -3.0, -5.0],
        [-2.5, -3.5, -4.5],
        [-1.0975, -1.525, -1.75],
        [-1.3475, -1.775, -2.0],
        [-2.5, -3.5, -4.5],
        [-4.0, -4.0, -4.0],
    ];
    let reward: Vec<f64> = MM_REWARD.iter().flatten().copied().collect();

    Domain::from_tables(
        "mm",
        states,
        [acts.clone(), acts],
        [obs.clone(), obs],
        transition,
        [obs_table(Agent::I), obs_table(Agent::J)],
        [reward.clone(), reward],
    )
}

/// Configuration for the UAV reconnaissance domain. The 3x3 theater is
/// abstracted to 3 rows x {side, center}, giving 6 locations per agent.
#[derive(Debug, Clone, Copy)]
pub struct UavConfig {
    /// Probability the reported row is the correct one; the remainder is
    /// split evenly over the two wrong rows.
    pub obs_accuracy: f64,
    /// Probability a commanded target move actually executes (the chance
    /// the target has been alerted that it is in danger).
    pub target_alert: f64,
    pub spot_reward: f64,
    pub step_reward: f64,
}

impl Default for UavConfig {
    fn default() -> Self {
        UavConfig {
            obs_accuracy: 0.8,
            target_alert: 0.1,
            spot_reward: 1.0,
            step_reward: 0.0,
        }
    }
}

const UAV_ROWS: usize = 3;
const UAV_LOCS: usize = UAV_ROWS * 2; // (row, side|center)

fn uav_loc_label(loc: usize) -> String {
    let row = loc / 2;
    let col = if loc % 2 == 0 { "side" } else { "center" };
    format!("r{row}-{col}")
}

fn uav_move(loc: usize, action: usize) -> usize {
    let (row, col) = (loc / 2, loc % 2);
    match action {
        0 => ((row + 1).min(UAV_ROWS - 1)) * 2 + col, // move_N
        1 => row.saturating_sub(1) * 2 + col,         // move_S
        2 | 3 => row * 2 + (1 - col),                 // move_E / move_W toggle side|center
        _ => loc,                                     // listen
    }
}

/// UAV reconnaissance: 36 physical states (UAV location x target location),
/// five actions and three row-report observations per agent. Co-located
/// states are absorbing with zero reward.
pub fn build_uav(cfg: UavConfig) -> Result<Domain> {
    for (label, p) in [
        ("obs_accuracy", cfg.obs_accuracy),
        ("target_alert", cfg.target_alert),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(NestError::Config(format!("{label} = {p} outside [0,1]")));
        }
    }
    let states: Vec<String> = (0..UAV_LOCS * UAV_LOCS)
        .map(|s| format!("u{}-t{}", uav_loc_label(s / UAV_LOCS), uav_loc_label(s % UAV_LOCS)))
        .collect();
    let acts: Vec<String> = ["move_N", "move_S", "move_E", "move_W", "listen"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let obs: Vec<String> = ["TR", "CR", "BR"].iter().map(|s| s.to_string()).collect();
    let listen = 4usize;
    let ns = UAV_LOCS * UAV_LOCS;
    let co_located = |s: usize| s / UAV_LOCS == s % UAV_LOCS;

    // transition rows and the spotting probability reused by the reward
    let mut transition = vec![0.0; 5 * 5 * ns * ns];
    let mut spot_prob = vec![0.0; 5 * 5 * ns];
    for ai in 0..5 {
        for aj in 0..5 {
            for s in 0..ns {
                let base = ((ai * 5 + aj) * ns + s) * ns;
                if co_located(s) {
                    transition[base + s] = 1.0;
                    continue;
                }
                let (u, t) = (s / UAV_LOCS, s % UAV_LOCS);
                let u2 = uav_move(u, ai);
                // target: commanded moves execute only when alerted
                let t_moved = uav_move(t, aj);
                let outcomes: [(usize, f64); 2] = if aj == listen || t_moved == t {
                    [(t, 1.0), (t, 0.0)]
                } else {
                    [(t_moved, cfg.target_alert), (t, 1.0 - cfg.target_alert)]
                };
                for (t2, p) in outcomes {
                    if p > 0.0 {
                        let s2 = u2 * UAV_LOCS + t2;
                        transition[base + s2] += p;
                        if co_located(s2) {
                            spot_prob[(ai * 5 + aj) * ns + s] += p;
                        }
                    }
                }
            }
        }
    }

    // Row reports: agent i is told the target's row, agent T the UAV's row.
    let row_report = |true_row: usize, acc: f64| -> [f64; 3] {
        let wrong = (1.0 - acc) / 2.0;
        let mut r = [wrong; 3];
        // observation labels are TR (top), CR, BR (bottom); rows count up
        r[UAV_ROWS - 1 - true_row] = acc;
        r
    };
    let obs_table = |agent: Agent| -> Vec<f64> {
        let mut tbl = Vec::new();
        for _ai in 0..5 {
            for _aj in 0..5 {
                for s_next in 0..ns {
                    let watched_loc = match agent {
                        Agent::I => s_next % UAV_LOCS,
                        Agent::J => s_next / UAV_LOCS,
                    };
                    tbl.extend(row_report(watched_loc / 2, cfg.obs_accuracy));
                }
            }
        }
        tbl
    };

    // Spotting pays the UAV and costs the target; objectives conflict.
    let mut reward_i = Vec::with_capacity(5 * 5 * ns);
    let mut reward_t = Vec::with_capacity(5 * 5 * ns);
    for ja in 0..25 {
        for s in 0..ns {
            if co_located(s) {
                reward_i.push(0.0);
                reward_t.push(0.0);
            } else {
                let p = spot_prob[ja * ns + s];
                reward_i.push(cfg.spot_reward * p + cfg.step_reward);
                reward_t.push(-cfg.spot_reward * p + cfg.step_reward);
            }
        }
    }

    Ok(Domain::from_tables(
        "uav",
        states,
        [acts.clone(), acts],
        [obs.clone(), obs],
        transition,
        [obs_table(Agent::I), obs_table(Agent::J)],
        [reward_i, reward_t],
    ))
}

/// Look up a built-in domain by name.
pub fn builtin_domain(name: &str) -> Result<Domain> {
    match name {
        "tiger" => Ok(build_tiger()),
        "tiger-growl-only" => Ok(build_tiger_growl_only()),
        "mm" => Ok(build_mm()),
        "uav" => build_uav(UavConfig::default()),
        _ => Err(NestError::Config(format!(
            "unknown domain '{name}' (built-ins: tiger, tiger-growl-only, mm, uav)"
        ))),
    }
}

/// Built-in priors by name. The `-informed` variants concentrate the
/// other agent's belief toward the true state; the `-l2-mix` variants are
/// equal mixtures of the uninformed and informed level-1 priors.
pub fn builtin_prior(name: &str, domain: &Domain) -> Result<NestedPrior> {
    let ns = domain.n_states();
    let uniform_marginal = vec![1.0 / ns as f64; ns];
    let uniform_l1 = NestedPrior::Level1 {
        state_marginal: uniform_marginal.clone(),
        densities: vec![DensitySpec::Uniform; ns],
    };
    match name {
        "tiger-l1-uniform" | "mm-l1-uniform" | "uav-l1-uniform" | "l1-uniform" => Ok(uniform_l1),
        "tiger-l1-informed" => {
            // the other agent likely knows the tiger's location
            Ok(NestedPrior::Level1 {
                state_marginal: vec![0.5, 0.5],
                densities: vec![
                    DensitySpec::Piecewise(vec![(0.0, 0.5, 0.2), (0.5, 1.0, 1.8)]),
                    DensitySpec::Piecewise(vec![(0.0, 0.5, 1.8), (0.5, 1.0, 0.2)]),
                ],
            })
        }
        "mm-l1-informed" => {
            let densities = (0..ns)
                .map(|s| {
                    let mut b = vec![0.1; ns];
                    b[s] = 1.0 - 0.1 * (ns as f64 - 1.0);
                    DensitySpec::PointMass(vec![(b, 1.0)])
                })
                .collect();
            Ok(NestedPrior::Level1 {
                state_marginal: uniform_marginal,
                densities,
            })
        }
        "tiger-l2-mix" => Ok(NestedPrior::Mixture {
            level: 2,
            state_marginal: uniform_marginal,
            components: vec![
                (0.5, builtin_prior("tiger-l1-uniform", domain)?),
                (0.5, builtin_prior("tiger-l1-informed", domain)?),
            ],
        }),
        "mm-l2-mix" => Ok(NestedPrior::Mixture {
            level: 2,
            state_marginal: uniform_marginal,
            components: vec![
                (0.5, builtin_prior("mm-l1-uniform", domain)?),
                (0.5, builtin_prior("mm-l1-informed", domain)?),
            ],
        }),
        _ => Err(NestError::Config(format!("unknown built-in prior '{name}'"))),
    }
}
