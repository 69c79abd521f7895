//! Simulation lab for local learning processes on two-queue Markov chains.
//!
//! * [`model`]: jump laws of the load-balancing, server-allocation and
//!   custom two-queue chains.
//! * [`conditions`]: drift-condition certification and the transience window.
//! * [`llp`]: the learning process engine (Q-learning, fixed and coin agents).
//! * [`renewal`]: record times, cycles and limiting-drift estimators.
//! * [`harness`]: seeded parallel ensembles, discounted costs, probes.
//! * [`io`] and [`cli`]: configs, CSV/JSON outputs and the `llp` binary.

mod error;

pub mod cli;
pub mod conditions;
pub mod harness;
pub mod io;
pub mod llp;
pub mod model;
pub mod renewal;

pub use error::{LabError, Result};
