//! Concentration-bound calculus for sampled-value planning, divergence
//! measures between filtered and baseline posteriors, and kernel density
//! estimation for plotting belief densities.

use crate::error::{NestError, Result};

/// Laplace smoothing added to both histograms before a divergence is
/// computed, keeping all logarithms finite.
pub const SMOOTHING: f64 = 1e-6;

/// One-step value estimation error that holds with probability 1-delta when
/// averaging N bounded samples with value range `rho`:
/// `epsilon = rho * sqrt(ln(2/delta) / (2N))`.
pub fn chernoff_epsilon(n: usize, delta: f64, rho: f64) -> Result<f64> {
    if n == 0 {
        return Err(NestError::DegenerateInput("N must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(NestError::DegenerateInput(format!("delta = {delta} outside (0,1)")));
    }
    if rho < 0.0 {
        return Err(NestError::DegenerateInput("value range must be nonnegative".into()));
    }
    Ok(rho * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Particles needed to bring the one-step error below `epsilon` with
/// probability 1-delta: the inverse of `chernoff_epsilon`, rounded up.
pub fn particles_needed(epsilon: f64, delta: f64, rho: f64) -> Result<usize> {
    if epsilon <= 0.0 {
        return Err(NestError::DegenerateInput("epsilon must be positive".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(NestError::DegenerateInput(format!("delta = {delta} outside (0,1)")));
    }
    if rho < 0.0 {
        return Err(NestError::DegenerateInput("value range must be nonnegative".into()));
    }
    // tolerance absorbs round-off so inverting chernoff_epsilon is exact
    let n = (rho * rho * (2.0 / delta).ln() / (2.0 * epsilon * epsilon) - 1e-9).ceil();
    Ok((n as usize).max(1))
}

/// Inputs to the horizon error bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub delta: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub r_max: f64,
    pub r_min: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) || self.delta == 0.0 {
            return Err(NestError::DegenerateInput(format!(
                "delta = {} outside (0,1)",
                self.delta
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(NestError::DegenerateInput(format!(
                "gamma = {} outside [0,1)",
                self.gamma
            )));
        }
        if self.r_max < self.r_min {
            return Err(NestError::DegenerateInput("R_max < R_min".into()));
        }
        Ok(())
    }

    /// Default per-step value range: the finite-horizon reward span
    /// (R_max - R_min)(1 - gamma^t)/(1 - gamma).
    pub fn default_rho(&self) -> f64 {
        (self.r_max - self.r_min) * (1.0 - self.gamma.powi(self.horizon as i32))
            / (1.0 - self.gamma)
    }
}

/// Cumulative value error over a finite horizon, given the one-step error
/// `epsilon` that holds with probability 1-delta:
/// `(1-delta) * 2 epsilon (1-gamma^t)/(1-gamma)
///  + delta * (R_max-R_min)(1-gamma^t)/(1-gamma)^2`.
/// Returns (bound, trivial worst bound), the latter being the second term
/// at delta = 1.
pub fn horizon_error_bound(inputs: &BoundInputs, epsilon: f64) -> Result<(f64, f64)> {
    inputs.validate()?;
    if epsilon < 0.0 {
        return Err(NestError::DegenerateInput("epsilon must be nonnegative".into()));
    }
    let geom = (1.0 - inputs.gamma.powi(inputs.horizon as i32)) / (1.0 - inputs.gamma);
    let worst = (inputs.r_max - inputs.r_min) * geom / (1.0 - inputs.gamma);
    let bound = (1.0 - inputs.delta) * 2.0 * epsilon * geom + inputs.delta * worst;
    Ok((bound, worst))
}

fn smoothed(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().map(|x| x + SMOOTHING).sum();
    v.iter().map(|x| (x + SMOOTHING) / total).collect()
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() != q.len() {
        return Err(NestError::PartitionMismatch(format!(
            "histograms have {} and {} cells",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(NestError::DegenerateInput("histogram entries must be nonnegative".into()));
    }
    Ok(())
}

/// Relative entropy D(p || q) in nats over a shared cell partition, with
/// Laplace smoothing applied to both sides; always finite and nonnegative.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let (p, q) = (smoothed(p), smoothed(q));
    Ok(p.iter()
        .zip(&q)
        .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / qi).ln() } else { 0.0 })
        .sum::<f64>()
        .max(0.0))
}

/// Total variation distance over a shared cell partition (histograms are
/// normalized first).
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let np: f64 = p.iter().sum();
    let nq: f64 = q.iter().sum();
    if np <= 0.0 || nq <= 0.0 {
        return Err(NestError::DegenerateInput("histogram with zero total mass".into()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(&a, &b)| (a / np - b / nq).abs()).sum::<f64>())
}

/// Gaussian kernel density estimate of samples on [0,1], renormalized so
/// the trapezoid integral over the evaluation lattice is 1. Returns
/// (lattice points, densities). Bandwidth defaults to Silverman's rule.
pub fn kde_density(
    samples: &[f64],
    bandwidth: Option<f64>,
    lattice_points: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(NestError::DegenerateInput("KDE needs at least one sample".into()));
    }
    if lattice_points < 2 {
        return Err(NestError::DegenerateInput("KDE lattice needs >= 2 points".into()));
    }
    let n = samples.len() as f64;
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(NestError::DegenerateInput(format!("bandwidth {h} must be positive")))
        }
        None => {
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sigma = var.sqrt();
            // Silverman's rule, floored so point masses still get a curve.
            (1.06 * sigma * n.powf(-0.2)).max(1e-3)
        }
    };
    let xs: Vec<f64> = (0..lattice_points)
        .map(|i| i as f64 / (lattice_points - 1) as f64)
        .collect();
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&s| (-(x - s).powi(2) / (2.0 * h * h)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    // renormalize over [0,1] by the trapezoid rule
    let dx = 1.0 / (lattice_points - 1) as f64;
    let integral: f64 = ys.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
    if integral > 0.0 {
        for y in &mut ys {
            *y /= integral;
        }
    }
    Ok((xs, ys))
}
