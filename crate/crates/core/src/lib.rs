//! Online learning in finite-horizon MDPs with aggregate bandit feedback,
//! via a reduction to distorted linear bandits.
//!
//! Layout:
//! - [`barrier`]: log-barrier calculus over polytopes with equality rows.
//! - [`dlb`]: the distorted-linear-bandit protocol, adversaries and regret.
//! - [`omd`]: barrier mirror descent with increasing learning rates.
//! - [`exp2`]: exponential weights with optimistic bias correction.
//! - [`mdp`]: finite-horizon MDPs and occupancy measures.
//! - [`reduction`]: the epoch-doubling reduction from MDPs to DLB.
//! - [`trace`]: per-round CSV traces.
//! - [`harness`]: experiment configuration, generators, runs and checkers.

pub mod barrier;
pub mod dlb;
pub mod error;
pub mod exp2;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod mdp;
pub mod omd;
pub mod reduction;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
