//! Generalized planning over classes of nondeterministic problems.
//!
//! A class of partially observable problems is abstracted into a single
//! fully observable problem over its observations. Policies for the
//! abstraction are computed either by LTL synthesis under trajectory
//! constraints or, for qualitative numerical problems, by fair FOND
//! planning on a compiled problem.

pub mod catalog;
pub mod constraints;
pub mod dot;
pub mod error;
pub mod fond;
pub(crate) mod graph;
pub mod io;
pub mod ltl;
pub mod model;
pub mod omega;
pub(crate) mod product;
pub mod projection;
pub mod qnp;

pub use constraints::TrajectoryConstraint;
pub use error::{Error, Result};
pub use model::{Fondp, Policy, Pondp, PondpClass, Verdict};
