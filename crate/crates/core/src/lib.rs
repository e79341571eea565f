//! Peer-to-peer storage allocation as a potential game.
//!
//! Units of a network each back up `alpha_x` data atoms on their neighbors
//! and offer `beta_x` slots of their own. The crate decides whether a full
//! allocation exists, runs the asynchronous noisy best-response dynamics,
//! and checks the dynamics against exact Markov-chain computations on small
//! instances.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod feasibility;
mod flow;
pub mod game;
pub mod io;
pub mod presets;
pub mod sample;
pub mod topology;

pub use error::{Error, Result};
pub use game::{AllocationState, GameParams, Gamma, Move};
pub use topology::{Instance, Topology, UnitId};
