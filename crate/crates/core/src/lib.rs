//! Sample-path large deviations for Lévy processes and random walks whose
//! jump distribution has a lognormal-type tail
//! `nu[x, inf) = c x^beta exp(-lambda (log x)^gamma)` with `gamma in (1, 2)`
//! (and the boundary case `gamma = 2`).
//!
//! The crate is organised bottom-up:
//!
//! * [`tail`] holds the tail model, its scaled inverse and the asymptotic
//!   limit identities;
//! * [`cadlag`] holds step paths and the uniform, J1 and M1' distances;
//! * [`jump_sim`] simulates the centred, scaled processes through the
//!   Poisson-point-process coupling;
//! * [`rare_event`] estimates rare-event probabilities and checks their
//!   logarithmic decay;
//! * [`counterexample`] evaluates the sets behind the failure of the M1'
//!   upper bound.

pub mod cadlag;
pub mod counterexample;
pub mod error;
pub mod jump_sim;
pub mod quad;
pub mod rare_event;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
