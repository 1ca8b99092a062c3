use std::sync::Arc;

use crate::error::{NestError, Result};
use crate::model::domain::{Agent, Domain};

/// One agent's non-belief model parameters: its role, the domain tables it
/// references, the discount factor, and a finite planning horizon.
#[derive(Debug, Clone)]
pub struct Frame {
    pub domain: Arc<Domain>,
    pub agent: Agent,
    pub gamma: f64,
    pub horizon: usize,
}

impl Frame {
    pub fn new(domain: Arc<Domain>, agent: Agent, gamma: f64, horizon: usize) -> Result<Frame> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(NestError::Config(format!("gamma must be in [0,1), got {gamma}")));
        }
        if horizon == 0 {
            return Err(NestError::Config("horizon must be >= 1".into()));
        }
        Ok(Frame { domain, agent, gamma, horizon })
    }

    /// The other agent's frame; both agents share gamma and horizon.
    pub fn other(&self) -> Frame {
        Frame {
            domain: Arc::clone(&self.domain),
            agent: self.agent.other(),
            gamma: self.gamma,
            horizon: self.horizon,
        }
    }

    /// Identity for memoization: domain instance, role, and discount.
    /// Horizon is keyed separately by callers.
    pub fn cache_key(&self) -> (usize, u8, u64) {
        (
            Arc::as_ptr(&self.domain) as usize,
            self.agent.idx() as u8,
            self.gamma.to_bits(),
        )
    }
}
