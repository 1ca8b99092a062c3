//! Two-agent domain tables: physical states, per-agent actions and
//! observations, and the joint-action transition / observation / reward
//! functions.

use crate::error::{NestError, Result};

pub const TABLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agent {
    I,
    J,
}

impl Agent {
    pub fn idx(self) -> usize {
        match self {
            Agent::I => 0,
            Agent::J => 1,
        }
    }

    pub fn other(self) -> Agent {
        match self {
            Agent::I => Agent::J,
            Agent::J => Agent::I,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Agent::I => "i",
            Agent::J => "j",
        }
    }
}

/// Immutable two-agent domain. Tables are dense, indexed by
/// (a_i, a_j, state); observation rows are conditioned on the *next* state.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: String,
    pub states: Vec<String>,
    pub actions: [Vec<String>; 2],
    pub observations: [Vec<String>; 2],
    transition: Vec<f64>,
    obsfn: [Vec<f64>; 2],
    reward: [Vec<f64>; 2],
    /// Dynamics with the other agent's action marginalized uniformly,
    /// per agent: `marg_t[k][a_own][s][s']`, `marg_o[k][a_own][s'][o]`.
    marg_t: [Vec<f64>; 2],
    marg_o: [Vec<f64>; 2],
    /// per agent: `marg_r[k][a_own][s]` — own reward with the other agent's
    /// action marginalized uniformly.
    marg_r: [Vec<f64>; 2],
    absorbing: Vec<bool>,
}

impl Domain {
    pub fn from_tables(
        name: impl Into<String>,
        states: Vec<String>,
        actions: [Vec<String>; 2],
        observations: [Vec<String>; 2],
        transition: Vec<f64>,
        obsfn: [Vec<f64>; 2],
        reward: [Vec<f64>; 2],
    ) -> Domain {
        let mut d = Domain {
            name: name.into(),
            states,
            actions,
            observations,
            transition,
            obsfn,
            reward,
            marg_t: [Vec::new(), Vec::new()],
            marg_o: [Vec::new(), Vec::new()],
            marg_r: [Vec::new(), Vec::new()],
            absorbing: Vec::new(),
        };
        d.finish();
        d
    }

    fn finish(&mut self) {
        let ns = self.n_states();
        let (nai, naj) = (self.n_actions(Agent::I), self.n_actions(Agent::J));
        for agent in [Agent::I, Agent::J] {
            let k = agent.idx();
            let na_own = self.n_actions(agent);
            let na_other = self.n_actions(agent.other());
            let no = self.n_obs(agent);
            let mut mt = vec![0.0; na_own * ns * ns];
            let mut mo = vec![0.0; na_own * ns * no];
            let mut mr = vec![0.0; na_own * ns];
            for a_own in 0..na_own {
                for a_other in 0..na_other {
                    let (ai, aj) = joint_for(agent, a_own, a_other);
                    for s in 0..ns {
                        let trow = self.transition_row(ai, aj, s);
                        for s2 in 0..ns {
                            mt[(a_own * ns + s) * ns + s2] += trow[s2] / na_other as f64;
                        }
                        mr[a_own * ns + s] += self.reward(agent, ai, aj, s);
                    }
                    for s2 in 0..ns {
                        let orow = self.obs_row(agent, ai, aj, s2);
                        for o in 0..no {
                            mo[(a_own * ns + s2) * no + o] += orow[o] / na_other as f64;
                        }
                    }
                }
            }
            for r in &mut mr {
                *r /= na_other as f64;
            }
            self.marg_t[k] = mt;
            self.marg_o[k] = mo;
            self.marg_r[k] = mr;
        }
        // A state is absorbing when every joint action self-loops with
        // probability 1 and yields zero reward to both agents.
        self.absorbing = (0..ns)
            .map(|s| {
                (0..nai).all(|ai| {
                    (0..naj).all(|aj| {
                        let row = self.transition_row(ai, aj, s);
                        (row[s] - 1.0).abs() < TABLE_TOL
                            && self.reward(Agent::I, ai, aj, s).abs() < TABLE_TOL
                            && self.reward(Agent::J, ai, aj, s).abs() < TABLE_TOL
                    })
                })
            })
            .collect();
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self, agent: Agent) -> usize {
        self.actions[agent.idx()].len()
    }

    pub fn n_obs(&self, agent: Agent) -> usize {
        self.observations[agent.idx()].len()
    }

    pub fn n_joint(&self) -> usize {
        self.n_actions(Agent::I) * self.n_actions(Agent::J)
    }

    pub fn transition_row(&self, ai: usize, aj: usize, s: usize) -> &[f64] {
        let ns = self.n_states();
        let base = ((ai * self.n_actions(Agent::J) + aj) * ns + s) * ns;
        &self.transition[base..base + ns]
    }

    pub fn obs_row(&self, agent: Agent, ai: usize, aj: usize, s_next: usize) -> &[f64] {
        let ns = self.n_states();
        let no = self.n_obs(agent);
        let base = ((ai * self.n_actions(Agent::J) + aj) * ns + s_next) * no;
        &self.obsfn[agent.idx()][base..base + no]
    }

    pub fn reward(&self, agent: Agent, ai: usize, aj: usize, s: usize) -> f64 {
        let ns = self.n_states();
        self.reward[agent.idx()][(ai * self.n_actions(Agent::J) + aj) * ns + s]
    }

    /// Reward extremes over both agents' tables, used by the bound calculus
    /// and value-sanity checks.
    pub fn reward_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in &self.reward {
            for &r in t {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }

    /// Transition row for agent `k` taking `a_own`, with the other agent's
    /// action marginalized uniformly.
    pub fn marg_t_row(&self, agent: Agent, a_own: usize, s: usize) -> &[f64] {
        let ns = self.n_states();
        let base = (a_own * ns + s) * ns;
        &self.marg_t[agent.idx()][base..base + ns]
    }

    /// Observation row for agent `k` with the other agent's action
    /// marginalized uniformly.
    pub fn marg_o_row(&self, agent: Agent, a_own: usize, s_next: usize) -> &[f64] {
        let no = self.n_obs(agent);
        let base = (a_own * self.n_states() + s_next) * no;
        &self.marg_o[agent.idx()][base..base + no]
    }

    /// Reward for agent `k` with the other agent's action marginalized
    /// uniformly.
    pub fn marg_reward(&self, agent: Agent, a_own: usize, s: usize) -> f64 {
        self.marg_r[agent.idx()][a_own * self.n_states() + s]
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|x| x == label)
    }

    pub fn action_index(&self, agent: Agent, label: &str) -> Option<usize> {
        self.actions[agent.idx()].iter().position(|x| x == label)
    }

    pub fn obs_index(&self, agent: Agent, label: &str) -> Option<usize> {
        self.observations[agent.idx()].iter().position(|x| x == label)
    }
}

/// Map (own agent, own action, other's action) to (a_i, a_j) table order.
pub fn joint_for(agent: Agent, a_own: usize, a_other: usize) -> (usize, usize) {
    match agent {
        Agent::I => (a_own, a_other),
        Agent::J => (a_other, a_own),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub table: String,
    pub key: String,
    pub constraint: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] row {}: {}", self.table, self.key, self.constraint)
    }
}

/// Check every probability row of the domain: entries in [0,1] and row sums
/// within `TABLE_TOL` of 1. Returns an empty report iff the domain is valid.
pub fn validate_domain(d: &Domain) -> Vec<Violation> {
    let mut out = Vec::new();
    let key = |ai: usize, aj: usize, s: usize| {
        format!(
            "<{} {}> {}",
            d.actions[0][ai], d.actions[1][aj], d.states[s]
        )
    };
    for ai in 0..d.n_actions(Agent::I) {
        for aj in 0..d.n_actions(Agent::J) {
            for s in 0..d.n_states() {
                check_row(d.transition_row(ai, aj, s), "transition", &key(ai, aj, s), &mut out);
                for agent in [Agent::I, Agent::J] {
                    check_row(
                        d.obs_row(agent, ai, aj, s),
                        &format!("observation {}", agent.label()),
                        &key(ai, aj, s),
                        &mut out,
                    );
                }
            }
        }
    }
    out
}

fn check_row(row: &[f64], table: &str, key: &str, out: &mut Vec<Violation>) {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > TABLE_TOL {
        out.push(Violation {
            table: table.to_string(),
            key: key.to_string(),
            constraint: format!("row sums to {sum}, expected 1 within {TABLE_TOL}"),
        });
    }
    for (idx, &p) in row.iter().enumerate() {
        if !(0.0..=1.0 + TABLE_TOL).contains(&p) {
            out.push(Violation {
                table: table.to_string(),
                key: key.to_string(),
                constraint: format!("entry {idx} = {p} outside [0,1]"),
            });
        }
    }
}

/// One table row keyed by possibly wildcarded (a_i, a_j, state).
#[derive(Debug, Clone)]
pub struct RowPattern {
    pub ai: Option<usize>,
    pub aj: Option<usize>,
    pub state: Option<usize>,
}

impl RowPattern {
    fn specificity(&self) -> u8 {
        self.ai.is_some() as u8 + self.aj.is_some() as u8 + self.state.is_some() as u8
    }
}

/// Accumulates wildcard rows into a dense `[a_i][a_j][state] -> row` table.
/// Explicit rows override wildcards; among overlapping patterns the more
/// specific one wins, and equal-specificity conflicts are rejected.
pub struct TableSpec {
    nai: usize,
    naj: usize,
    ns: usize,
    width: usize,
    cells: Vec<Option<(u8, Vec<f64>)>>,
}

impl TableSpec {
    pub fn new(nai: usize, naj: usize, ns: usize, width: usize) -> TableSpec {
        TableSpec {
            nai,
            naj,
            ns,
            width,
            cells: vec![None; nai * naj * ns],
        }
    }

    pub fn add(&mut self, pat: RowPattern, values: Vec<f64>) -> Result<()> {
        if values.len() != self.width {
            return Err(NestError::Config(format!(
                "row has {} values, expected {}",
                values.len(),
                self.width
            )));
        }
        let spec = pat.specificity();
        let ais: Vec<usize> = pat.ai.map_or((0..self.nai).collect(), |a| vec![a]);
        let ajs: Vec<usize> = pat.aj.map_or((0..self.naj).collect(), |a| vec![a]);
        let sts: Vec<usize> = pat.state.map_or((0..self.ns).collect(), |s| vec![s]);
        for &ai in &ais {
            for &aj in &ajs {
                for &s in &sts {
                    let idx = (ai * self.naj + aj) * self.ns + s;
                    match &self.cells[idx] {
                        // Overlapping wildcards at equal specificity are fine
                        // when they agree (Table-style `<OL,*>` + `<*,OL>`).
                        Some((old, row)) if *old == spec => {
                            if row != &values {
                                return Err(NestError::Config(format!(
                                    "conflicting rows of equal specificity for cell (a_i={ai}, a_j={aj}, s={s})"
                                )));
                            }
                        }
                        Some((old, _)) if *old > spec => {}
                        _ => self.cells[idx] = Some((spec, values.clone())),
                    }
                }
            }
        }
        Ok(())
    }

    /// Dense table; errors if any (joint action, state) cell is uncovered.
    pub fn build(self, table_name: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.cells.len() * self.width);
        for (idx, cell) in self.cells.iter().enumerate() {
            match cell {
                Some((_, row)) => out.extend_from_slice(row),
                None => {
                    let s = idx % self.ns;
                    let aj = (idx / self.ns) % self.naj;
                    let ai = idx / (self.ns * self.naj);
                    return Err(NestError::Config(format!(
                        "table {table_name}: no row covers (a_i={ai}, a_j={aj}, s={s})"
                    )));
                }
            }
        }
        Ok(out)
    }
}
