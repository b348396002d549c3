//! Online resource allocation under endogenous costs: interaction graphs,
//! payoff and reward models, allocation policies, value environments, and
//! regret instrumentation.
//!
//! The math modules are generic over the scalar type via [`scalar::Scalar`];
//! the aliases below fix `f64`, which the harness and CLI use throughout.

pub mod allocators;
pub mod environments;
pub mod error;
pub mod graph;
pub mod harness;
pub mod payoff;
pub mod regret;
pub mod scalar;

pub use error::{Error, Result};

/// Interaction graph over `f64` weights.
pub type Graph = graph::InteractionGraph<f64>;
/// Simplex allocation over `f64`.
pub type Alloc = payoff::Allocation<f64>;
/// Module-value vector over `f64`.
pub type Values = payoff::ValueVector<f64>;
/// Allocation policy over `f64`.
pub type Policy = allocators::Allocator<f64>;
/// Value-generating environment over `f64`.
pub type Env = environments::Environment<f64>;
