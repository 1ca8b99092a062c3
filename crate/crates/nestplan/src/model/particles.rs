//! Interactive-state particles and weighted particle sets.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{NestError, Result};
use crate::model::frame::Frame;
use crate::rng::RngStream;

pub const WEIGHT_TOL: f64 = 1e-9;

/// The other agent's model inside a particle: an exact level-0 belief
/// vector, or a particle set one nesting level down.
#[derive(Debug, Clone)]
pub enum OtherModel {
    Level0(Vec<f64>),
    Nested(Box<ParticleSet>),
}

impl OtherModel {
    pub fn level(&self) -> usize {
        match self {
            OtherModel::Level0(_) => 0,
            OtherModel::Nested(ps) => ps.level,
        }
    }
}

/// One interactive state: a physical state paired with the other agent's
/// model, plus an importance weight.
#[derive(Debug, Clone)]
pub struct InteractiveParticle {
    pub state: usize,
    pub other: OtherModel,
    pub weight: f64,
}

/// A set of N interactive-state particles at nesting level `level >= 1`.
/// The other agent's frame is shared by all particles (frames are static).
#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub level: usize,
    pub nominal_n: usize,
    pub other_frame: Frame,
    pub particles: Vec<InteractiveParticle>,
}

impl ParticleSet {
    /// Check that every nested set sits exactly one level below its parent.
    pub fn check_levels(&self) -> Result<()> {
        for p in &self.particles {
            let found = p.other.level();
            if found + 1 != self.level {
                return Err(NestError::LevelMismatch {
                    expected: self.level - 1,
                    found,
                });
            }
            if let OtherModel::Nested(ps) = &p.other {
                ps.check_levels()?;
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= WEIGHT_TOL
    }

    /// Weighted physical-state marginal (normalized).
    pub fn state_marginal(&self) -> Vec<f64> {
        let ns = self.other_frame.domain.n_states();
        let mut m = vec![0.0; ns];
        for p in &self.particles {
            m[p.state] += p.weight;
        }
        let total: f64 = m.iter().sum();
        if total > 0.0 {
            for x in &mut m {
                *x /= total;
            }
        }
        m
    }

    /// Order-insensitive structural hash for memoizing recursive solves.
    /// Beliefs are quantized at 1e-9 so resampled duplicates collide.
    pub fn fingerprint(&self) -> u64 {
        let mut keys: Vec<u64> = self
            .particles
            .iter()
            .map(|p| {
                let mut h = DefaultHasher::new();
                p.state.hash(&mut h);
                quantize_model(&p.other, &mut h);
                h.finish()
            })
            .collect();
        keys.sort_unstable();
        let mut h = DefaultHasher::new();
        self.level.hash(&mut h);
        keys.hash(&mut h);
        h.finish()
    }
}

fn quantize_model(om: &OtherModel, h: &mut DefaultHasher) {
    match om {
        OtherModel::Level0(b) => {
            for &x in b {
                ((x / WEIGHT_TOL).round() as i64).hash(h);
            }
        }
        OtherModel::Nested(ps) => ps.fingerprint().hash(h),
    }
}

/// Rescale weights to sum 1, preserving proportions.
/// Errors with `ParticleDepletion` if every weight is zero.
pub fn normalize_weights(particles: &mut [InteractiveParticle]) -> Result<()> {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if total <= 0.0 {
        return Err(NestError::ParticleDepletion);
    }
    for p in particles.iter_mut() {
        p.weight /= total;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleScheme {
    /// Independent draws with replacement (the unbiased scheme analyzed in
    /// the error bounds). Default.
    #[default]
    Multinomial,
    /// Systematic (stratified single-offset) resampling; lower variance,
    /// different statistical properties. Off by default.
    Systematic,
}

/// Draw `n` particles with replacement proportional to weights; output
/// weights are all 1/n. The input must carry positive total weight.
pub fn resample_unbiased(
    particles: &[InteractiveParticle],
    level: usize,
    other_frame: &Frame,
    n: usize,
    scheme: ResampleScheme,
    stream: &mut RngStream,
) -> Result<ParticleSet> {
    if particles.is_empty() || n == 0 {
        return Err(NestError::DegenerateInput(
            "resampling needs a nonempty input and N >= 1".into(),
        ));
    }
    let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(NestError::ParticleDepletion);
    }
    let uniform = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    match scheme {
        ResampleScheme::Multinomial => {
            // cumulative weights + binary search: picks the same index as a
            // linear scan for the same uniform draw
            let mut cum = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for &w in &weights {
                acc += w;
                cum.push(acc);
            }
            for _ in 0..n {
                let u = stream.uniform() * total;
                let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                let mut p = particles[idx].clone();
                p.weight = uniform;
                out.push(p);
            }
        }
        ResampleScheme::Systematic => {
            let step = total / n as f64;
            let mut u = stream.uniform() * step;
            let mut acc = weights[0];
            let mut idx = 0;
            for _ in 0..n {
                while u >= acc && idx + 1 < particles.len() {
                    idx += 1;
                    acc += weights[idx];
                }
                let mut p = particles[idx].clone();
                p.weight = uniform;
                out.push(p);
                u += step;
            }
        }
    }
    Ok(ParticleSet {
        level,
        nominal_n: n,
        other_frame: other_frame.clone(),
        particles: out,
    })
}
