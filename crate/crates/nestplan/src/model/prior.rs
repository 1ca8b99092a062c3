//! Declarative priors over interactive states, and sampling particle sets
//! from them.

use crate::error::{NestError, Result};
use crate::model::frame::Frame;
use crate::model::particles::{InteractiveParticle, OtherModel, ParticleSet, WEIGHT_TOL};
use crate::rng::RngStream;

/// A density over the other agent's level-0 belief simplex.
#[derive(Debug, Clone)]
pub enum DensitySpec {
    /// Uniform over the simplex.
    Uniform,
    /// Piecewise-constant over bins of [0,1] for the first state's
    /// probability. Two-state simplexes only. Entries are
    /// (lo, hi, density).
    Piecewise(Vec<(f64, f64, f64)>),
    /// Weighted list of exact belief vectors.
    PointMass(Vec<(Vec<f64>, f64)>),
}

impl DensitySpec {
    fn validate(&self, ns: usize) -> Result<()> {
        match self {
            DensitySpec::Uniform => Ok(()),
            DensitySpec::Piecewise(bins) => {
                if ns != 2 {
                    return Err(NestError::Config(
                        "piecewise densities are only supported on 2-state simplexes".into(),
                    ));
                }
                if bins.is_empty() {
                    return Err(NestError::Config("piecewise density has no bins".into()));
                }
                let mut edge = 0.0;
                for &(lo, hi, d) in bins {
                    if (lo - edge).abs() > WEIGHT_TOL || hi <= lo {
                        return Err(NestError::Config(
                            "piecewise bin edges must partition [0,1]".into(),
                        ));
                    }
                    if d < 0.0 {
                        return Err(NestError::Config("piecewise density must be nonnegative".into()));
                    }
                    edge = hi;
                }
                if (edge - 1.0).abs() > WEIGHT_TOL {
                    return Err(NestError::Config(
                        "piecewise bins must end at 1.0".into(),
                    ));
                }
                Ok(())
            }
            DensitySpec::PointMass(points) => {
                if points.is_empty() {
                    return Err(NestError::Config("point-mass density has no points".into()));
                }
                for (b, w) in points {
                    if b.len() != ns {
                        return Err(NestError::Config("point-mass belief has wrong arity".into()));
                    }
                    check_prob_vec(b, "point-mass belief")?;
                    if *w < 0.0 {
                        return Err(NestError::Config("point-mass weight must be nonnegative".into()));
                    }
                }
                Ok(())
            }
        }
    }

    fn sample(&self, ns: usize, stream: &mut RngStream) -> Vec<f64> {
        match self {
            DensitySpec::Uniform => stream.sample_simplex(ns),
            DensitySpec::Piecewise(bins) => {
                let masses: Vec<f64> = bins.iter().map(|&(lo, hi, d)| (hi - lo) * d).collect();
                let idx = stream.sample_index(&masses);
                let (lo, hi, _) = bins[idx];
                let x = lo + stream.uniform() * (hi - lo);
                vec![x, 1.0 - x]
            }
            DensitySpec::PointMass(points) => {
                let weights: Vec<f64> = points.iter().map(|(_, w)| *w).collect();
                points[stream.sample_index(&weights)].0.clone()
            }
        }
    }
}

/// A nested prior over interactive states at some level.
#[derive(Debug, Clone)]
pub enum NestedPrior {
    /// Level 0: a probability vector over physical states.
    Level0(Vec<f64>),
    /// Level 1: physical-state marginal plus one density over the other's
    /// level-0 simplex per state (the other's frame is fixed and known).
    Level1 {
        state_marginal: Vec<f64>,
        densities: Vec<DensitySpec>,
    },
    /// Level >= 2: physical-state marginal plus a weighted finite mixture of
    /// level-(l-1) priors describing the other agent's belief.
    Mixture {
        level: usize,
        state_marginal: Vec<f64>,
        components: Vec<(f64, NestedPrior)>,
    },
}

fn check_prob_vec(v: &[f64], what: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(NestError::Config(format!(
            "{what} sums to {sum}, expected 1 within {WEIGHT_TOL}"
        )));
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(NestError::Config(format!("{what} has a negative entry")));
    }
    Ok(())
}

impl NestedPrior {
    pub fn level(&self) -> usize {
        match self {
            NestedPrior::Level0(_) => 0,
            NestedPrior::Level1 { .. } => 1,
            NestedPrior::Mixture { level, .. } => *level,
        }
    }

    pub fn validate(&self, ns: usize) -> Result<()> {
        match self {
            NestedPrior::Level0(b) => check_prob_vec(b, "level-0 belief"),
            NestedPrior::Level1 { state_marginal, densities } => {
                check_prob_vec(state_marginal, "state marginal")?;
                if densities.len() != ns {
                    return Err(NestError::Config(format!(
                        "level-1 prior needs one density per state ({ns}), got {}",
                        densities.len()
                    )));
                }
                for d in densities {
                    d.validate(ns)?;
                }
                Ok(())
            }
            NestedPrior::Mixture { level, state_marginal, components } => {
                if *level < 2 {
                    return Err(NestError::Config("mixture priors require level >= 2".into()));
                }
                check_prob_vec(state_marginal, "state marginal")?;
                let wsum: f64 = components.iter().map(|(w, _)| *w).sum();
                if (wsum - 1.0).abs() > WEIGHT_TOL {
                    return Err(NestError::Config(format!(
                        "mixture weights sum to {wsum}, expected 1"
                    )));
                }
                for (w, c) in components {
                    if *w < 0.0 {
                        return Err(NestError::Config("mixture weight must be nonnegative".into()));
                    }
                    if c.level() + 1 != *level {
                        return Err(NestError::Config(format!(
                            "mixture component at level {} under a level-{} prior",
                            c.level(),
                            level
                        )));
                    }
                    c.validate(ns)?;
                }
                Ok(())
            }
        }
    }
}

/// Draw N interactive-state particles from a nested prior at level >= 1.
/// `other_frame` is the modeled agent's frame at the top level; deeper
/// levels alternate roles. Deterministic given (prior, N, stream key).
pub fn sample_initial_particles(
    prior: &NestedPrior,
    other_frame: &Frame,
    n: usize,
    stream: &RngStream,
) -> Result<ParticleSet> {
    if n == 0 {
        return Err(NestError::DegenerateInput("N must be >= 1".into()));
    }
    let ns = other_frame.domain.n_states();
    prior.validate(ns)?;
    if prior.level() == 0 {
        return Err(NestError::DegenerateInput(
            "interactive particle sets require a prior at level >= 1".into(),
        ));
    }
    sample_level(prior, other_frame, n, stream)
}

fn sample_level(
    prior: &NestedPrior,
    other_frame: &Frame,
    n: usize,
    stream: &RngStream,
) -> Result<ParticleSet> {
    let ns = other_frame.domain.n_states();
    let uniform = 1.0 / n as f64;
    let mut particles = Vec::with_capacity(n);
    match prior {
        NestedPrior::Level0(_) => unreachable!("guarded by caller"),
        NestedPrior::Level1 { state_marginal, densities } => {
            for idx in 0..n {
                let mut s = stream.child(&[idx as u64]);
                let state = s.sample_index(state_marginal);
                let belief = densities[state].sample(ns, &mut s);
                particles.push(InteractiveParticle {
                    state,
                    other: OtherModel::Level0(belief),
                    weight: uniform,
                });
            }
        }
        NestedPrior::Mixture { state_marginal, components, .. } => {
            let comp_weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
            for idx in 0..n {
                let mut s = stream.child(&[idx as u64]);
                let state = s.sample_index(state_marginal);
                let comp = s.sample_index(&comp_weights);
                let nested = sample_level(
                    &components[comp].1,
                    &other_frame.other(),
                    n,
                    &s.child(&[1]),
                )?;
                particles.push(InteractiveParticle {
                    state,
                    other: OtherModel::Nested(Box::new(nested)),
                    weight: uniform,
                });
            }
        }
    }
    Ok(ParticleSet {
        level: prior.level(),
        nominal_n: n,
        other_frame: other_frame.clone(),
        particles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::build_tiger;
    use crate::model::domain::Agent;
    use std::sync::Arc;

    fn j_frame() -> Frame {
        Frame::new(Arc::new(build_tiger()), Agent::J, 0.9, 1).unwrap()
    }

    fn uniform_level1() -> NestedPrior {
        NestedPrior::Level1 {
            state_marginal: vec![0.5, 0.5],
            densities: vec![DensitySpec::Uniform, DensitySpec::Uniform],
        }
    }

    #[test]
    fn uniform_level1_marginal() {
        let ps =
            sample_initial_particles(&uniform_level1(), &j_frame(), 5000, &RngStream::from_seed(11))
                .unwrap();
        let m = ps.state_marginal();
        assert!(m[0] > 0.48 && m[0] < 0.52, "Pr(TL) = {}", m[0]);
        ps.check_levels().unwrap();
    }

    #[test]
    fn point_mass_prior_degenerate() {
        let prior = NestedPrior::Level1 {
            state_marginal: vec![1.0, 0.0],
            densities: vec![
                DensitySpec::PointMass(vec![(vec![0.5, 0.5], 1.0)]),
                DensitySpec::PointMass(vec![(vec![0.5, 0.5], 1.0)]),
            ],
        };
        let ps = sample_initial_particles(&prior, &j_frame(), 100, &RngStream::from_seed(0)).unwrap();
        for p in &ps.particles {
            assert_eq!(p.state, 0);
            match &p.other {
                OtherModel::Level0(b) => assert_eq!(b, &vec![0.5, 0.5]),
                _ => panic!("expected level-0 model"),
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_initial_particles(&uniform_level1(), &j_frame(), 64, &RngStream::from_seed(5))
            .unwrap();
        let b = sample_initial_particles(&uniform_level1(), &j_frame(), 64, &RngStream::from_seed(5))
            .unwrap();
        for (x, y) in a.particles.iter().zip(&b.particles) {
            assert_eq!(x.state, y.state);
            match (&x.other, &y.other) {
                (OtherModel::Level0(bx), OtherModel::Level0(by)) => assert_eq!(bx, by),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn level2_mixture_chi_square() {
        // Two identifiable level-1 components with equal weights; component
        // counts over 5000 draws must pass a chi-square test at alpha=0.01
        // (df=1, critical value 6.635). Oracle: exact binomial(5000, 0.5).
        let comp = |x: f64| NestedPrior::Level1 {
            state_marginal: vec![0.5, 0.5],
            densities: vec![
                DensitySpec::PointMass(vec![(vec![x, 1.0 - x], 1.0)]),
                DensitySpec::PointMass(vec![(vec![x, 1.0 - x], 1.0)]),
            ],
        };
        let prior = NestedPrior::Mixture {
            level: 2,
            state_marginal: vec![0.5, 0.5],
            components: vec![(0.5, comp(0.1)), (0.5, comp(0.9))],
        };
        let ps =
            sample_initial_particles(&prior, &j_frame(), 5000, &RngStream::from_seed(23)).unwrap();
        ps.check_levels().unwrap();
        let mut counts = [0u64; 2];
        for p in &ps.particles {
            let OtherModel::Nested(inner) = &p.other else { panic!() };
            let OtherModel::Level0(b) = &inner.particles[0].other else { panic!() };
            if b[0] < 0.5 {
                counts[0] += 1;
            } else {
                counts[1] += 1;
            }
        }
        let expected = 2500.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 6.635, "chi2 = {chi2}");
    }

    #[test]
    fn zero_particles_rejected() {
        assert!(matches!(
            sample_initial_particles(&uniform_level1(), &j_frame(), 0, &RngStream::from_seed(0)),
            Err(NestError::DegenerateInput(_))
        ));
    }
}
