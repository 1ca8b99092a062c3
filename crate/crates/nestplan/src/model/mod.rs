pub mod domain;
pub mod frame;
pub mod particles;
pub mod prior;

pub use domain::{joint_for, validate_domain, Agent, Domain, RowPattern, TableSpec, Violation};
pub use frame::Frame;
pub use particles::{
    normalize_weights, resample_unbiased, InteractiveParticle, OtherModel, ParticleSet,
    ResampleScheme,
};
pub use prior::{sample_initial_particles, DensitySpec, NestedPrior};
