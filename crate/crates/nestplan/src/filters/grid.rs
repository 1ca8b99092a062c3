//! Near-exact level-1 filtering baseline: the other agent's level-0 belief
//! simplex is discretized to a regular lattice and mass is tracked over
//! (physical state, lattice vertex) cells.

use crate::error::{NestError, Result};
use crate::model::domain::joint_for;
use crate::model::frame::Frame;
use crate::model::particles::{OtherModel, ParticleSet, WEIGHT_TOL};
use crate::model::prior::{DensitySpec, NestedPrior};
use crate::planner::{solve_level0_policy, SolveCtx};

/// A level-1 belief over (physical state, other agent's level-0 belief),
/// with the belief dimension discretized to a regular lattice of resolution
/// G (for 2 states: G+1 points on [0,1]).
#[derive(Debug, Clone)]
pub struct GridBelief {
    /// The owning agent's frame; the modeled agent is `frame.other()`.
    pub frame: Frame,
    pub resolution: usize,
    vertices: Vec<Vec<f64>>,
    /// Mass per (state, vertex), laid out state-major.
    mass: Vec<f64>,
}

/// All compositions of `g` into `parts` nonnegative integers, as belief
/// vectors with denominator `g` (the regular simplex lattice).
fn lattice(parts: usize, g: usize) -> Vec<Vec<f64>> {
    fn rec(parts: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(parts - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    rec(parts, g, &mut Vec::new(), &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / g as f64).collect())
        .collect()
}

impl GridBelief {
    pub fn n_states(&self) -> usize {
        self.frame.domain.n_states()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, idx: usize) -> &[f64] {
        &self.vertices[idx]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Iterate (state, vertex index, mass).
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nv = self.n_vertices();
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &m)| (i / nv, i % nv, m))
    }

    pub fn state_marginal(&self) -> Vec<f64> {
        let nv = self.n_vertices();
        (0..self.n_states())
            .map(|s| self.mass[s * nv..(s + 1) * nv].iter().sum())
            .collect()
    }

    fn empty(frame: Frame, g: usize) -> Result<GridBelief> {
        if g == 0 {
            return Err(NestError::Config("grid resolution must be >= 1".into()));
        }
        let ns = frame.domain.n_states();
        let vertices = lattice(ns, g);
        let mass = vec![0.0; ns * vertices.len()];
        Ok(GridBelief { frame, resolution: g, vertices, mass })
    }

    /// Uniform mass over every (state, vertex) cell.
    pub fn uniform(frame: Frame, g: usize) -> Result<GridBelief> {
        let mut gb = GridBelief::empty(frame, g)?;
        let n = gb.mass.len() as f64;
        gb.mass.fill(1.0 / n);
        Ok(gb)
    }

    /// Discretize a level-1 prior: per state, spread the density's mass over
    /// the lattice (2-state densities are integrated over each vertex's
    /// half-open cell; point masses are projected).
    pub fn from_prior(prior: &NestedPrior, frame: Frame, g: usize) -> Result<GridBelief> {
        let ns = frame.domain.n_states();
        prior.validate(ns)?;
        let NestedPrior::Level1 { state_marginal, densities } = prior else {
            return Err(NestError::Config(
                "grid beliefs require a level-1 prior".into(),
            ));
        };
        let mut gb = GridBelief::empty(frame, g)?;
        let nv = gb.n_vertices();
        for (s, density) in densities.iter().enumerate() {
            let sm = state_marginal[s];
            if sm == 0.0 {
                continue;
            }
            match density {
                DensitySpec::Uniform => {
                    if ns == 2 {
                        // vertex k owns [(k-1/2)/G, (k+1/2)/G] ∩ [0,1]
                        for k in 0..nv {
                            let len = if k == 0 || k == nv - 1 { 0.5 } else { 1.0 };
                            gb.mass[s * nv + k] = sm * len / g as f64;
                        }
                    } else {
                        for k in 0..nv {
                            gb.mass[s * nv + k] = sm / nv as f64;
                        }
                    }
                }
                DensitySpec::Piecewise(bins) => {
                    for k in 0..nv {
                        let lo = (k as f64 - 0.5) / g as f64;
                        let hi = (k as f64 + 0.5) / g as f64;
                        let mut cell = 0.0;
                        for &(blo, bhi, d) in bins {
                            let a = blo.max(lo.max(0.0));
                            let b = bhi.min(hi.min(1.0));
                            if b > a {
                                cell += d * (b - a);
                            }
                        }
                        // vertex k sits at b(first state) = k/G; the density
                        // is over the first state's probability
                        gb.mass[s * nv + k] = sm * cell;
                    }
                }
                DensitySpec::PointMass(points) => {
                    let wsum: f64 = points.iter().map(|(_, w)| w).sum();
                    for (b, w) in points {
                        for (k, frac) in gb.project(b) {
                            gb.mass[s * nv + k] += sm * w / wsum * frac;
                        }
                    }
                }
            }
        }
        gb.normalize()?;
        Ok(gb)
    }

    /// Project an arbitrary belief onto the lattice: linear mass split
    /// between the two bracketing vertices for 2-state simplexes, nearest
    /// vertex otherwise.
    pub fn project(&self, b: &[f64]) -> Vec<(usize, f64)> {
        let g = self.resolution;
        if self.n_states() == 2 {
            // vertices are ordered by the lattice enumeration: index k has
            // first-state probability k/G
            let x = (b[0].clamp(0.0, 1.0)) * g as f64;
            let lo = x.floor() as usize;
            let frac = x - lo as f64;
            if lo >= g {
                vec![(g, 1.0)]
            } else if frac < WEIGHT_TOL {
                vec![(lo, 1.0)]
            } else {
                vec![(lo, 1.0 - frac), (lo + 1, frac)]
            }
        } else {
            let nearest = self
                .vertices
                .iter()
                .enumerate()
                .min_by(|(_, u), (_, v)| {
                    let du: f64 = u.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum();
                    let dv: f64 = v.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum();
                    du.partial_cmp(&dv).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            vec![(nearest, 1.0)]
        }
    }

    fn normalize(&mut self) -> Result<()> {
        let total: f64 = self.mass.iter().sum();
        if total <= 0.0 {
            return Err(NestError::InconsistentObservation);
        }
        for m in &mut self.mass {
            *m /= total;
        }
        Ok(())
    }

    /// Histogram a level-1 particle set onto this grid's (state, vertex)
    /// partition, using the same projection as the update, for divergence
    /// comparisons.
    pub fn bin_particles(&self, ps: &ParticleSet) -> Result<Vec<f64>> {
        let nv = self.n_vertices();
        let total = ps.total_weight();
        let mut hist = vec![0.0; self.mass.len()];
        for p in &ps.particles {
            let OtherModel::Level0(b) = &p.other else {
                return Err(NestError::PartitionMismatch(
                    "grid binning requires level-1 particles".into(),
                ));
            };
            for (k, frac) in self.project(b) {
                hist[p.state * nv + k] += p.weight / total * frac;
            }
        }
        Ok(hist)
    }
}

/// One exact-on-the-grid filter step: for every (state, vertex) cell, act
/// the other agent by its exactly solved level-0 policy, branch over its
/// actions and observations, move mass through the transition weighted by
/// both observation likelihoods, update the vertex belief exactly, and
/// project it back onto the lattice. `other_horizon` is the other agent's
/// planning horizon.
pub fn grid_update_level1(
    gb: &GridBelief,
    a_own: usize,
    o_own: usize,
    other_horizon: usize,
    ctx: &mut SolveCtx,
) -> Result<GridBelief> {
    let frame = &gb.frame;
    let other = frame.other();
    let d = frame.domain.clone();
    let ns = d.n_states();
    let nv = gb.n_vertices();
    let no_other = d.n_obs(other.agent);
    let mut out = GridBelief::empty(frame.clone(), gb.resolution)?;
    for (s, vtx, mass) in gb.cells() {
        if mass == 0.0 {
            continue;
        }
        let b_other = gb.vertex(vtx).to_vec();
        let dist = solve_level0_policy(&b_other, &other, other_horizon, ctx).0;
        ctx.other_solves += 1;
        for (a_other, &pa) in dist.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let (ai, aj) = joint_for(frame.agent, a_own, a_other);
            let trow = d.transition_row(ai, aj, s);
            for o_other in 0..no_other {
                let Some(b2) = ctx.level0_update_cached(&b_other, a_other, o_other, &other) else {
                    continue;
                };
                let targets = out.project(&b2);
                for s2 in 0..ns {
                    if trow[s2] == 0.0 {
                        continue;
                    }
                    let w = mass
                        * pa
                        * trow[s2]
                        * d.obs_row(other.agent, ai, aj, s2)[o_other]
                        * d.obs_row(frame.agent, ai, aj, s2)[o_own];
                    if w == 0.0 {
                        continue;
                    }
                    for &(k, frac) in &targets {
                        out.mass[s2 * nv + k] += w * frac;
                    }
                }
            }
        }
    }
    out.normalize()?;
    Ok(out)
}
