//! Contextual-phase measurement model for separated subsystems of bipartite
//! maximally entangled qubit states.
//!
//! The crate lifts a Bell state from the tensor product back to
//! representatives in the free vector space on pairs of labelled kets,
//! projects each representative onto the two subsystems, and collapses the
//! resulting formal sums to definite local kets. Every prediction can be
//! checked against [`oracle`], a plain Born-rule implementation that shares
//! nothing with the lifting pipeline except [`hilbert`].

pub mod contextual;
pub mod error;
pub mod fixtures;
pub mod freevec;
pub mod hilbert;
pub mod measurement;
pub mod oracle;
pub mod rng;
pub mod stations;

pub use error::{Error, Result};
pub use hilbert::{BellKind, Frame, Side};
