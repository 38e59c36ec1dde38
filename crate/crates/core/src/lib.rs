pub mod error;
pub mod linalg;
pub mod model;
pub mod potdc;
pub mod unitary;
pub mod alternating;
pub mod baselines;
pub mod experiment;
