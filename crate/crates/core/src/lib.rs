//! Noise-resilient simulation of two-party interactive protocols in small space.
//!
//! A protocol is given as a layered pebble-game DAG ([`protocol::ProtocolDag`]).
//! [`party::PartyState`] runs the robust transformation for one side: the
//! original protocol is simulated in chunks of `r` rounds, every chunk is
//! guarded by short hashes, and the parties rewind to shared checkpoints
//! ("meeting points") whenever they detect disagreement. Only a logarithmic
//! number of checkpoints is ever held in memory.
//!
//! The [`trial`] driver runs both parties in lockstep over an adversarial
//! [`channel`], while [`ghost`] tracks the omniscient quantities used to reason
//! about progress (divergent point, bad spells, potential).

pub mod adversary;
pub mod bits;
pub mod channel;
pub mod config;
pub mod ecc;
pub mod error;
pub mod gf2m;
pub mod ghost;
pub mod harness;
pub mod hash;
pub mod meeting;
pub mod party;
pub mod protocol;
pub mod schedule;
pub mod trial;

pub use error::{Error, Result};
pub use protocol::{Party, ProtocolDag, StateId};
