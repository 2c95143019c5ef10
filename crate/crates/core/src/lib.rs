//! Exact probability on sequences of seven-symbol moves, the lattice random
//! walk built on it, and discrete force laws for that walk.
//!
//! * [`event`]: events of the cylinder algebra as a canonical decision DAG,
//!   with exact measures under a [`StepProbabilityTable`].
//! * [`walk`]: closed-form means, velocities, accelerations and covariance
//!   traces of the walk.
//! * [`dynamics`]: table evolution under zero and constant or time-varying
//!   forces, and the force/acceleration identities.
//! * [`sim`]: seeded Monte Carlo estimates used to cross-check the exact
//!   values.
//! * [`expr`]: the text syntax for events.

#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod event;
pub mod expr;
pub mod rational;
pub mod sim;
pub mod symbol;
pub mod table;
pub mod walk;

pub use dynamics::{ForceSchedule, ForceVector, ResultantForce};
pub use error::{Error, Result};
pub use event::{EventArena, EventSet};
pub use expr::{EventExpression, SyntaxError};
pub use rational::Rational;
pub use sim::{EnsembleStats, EventEstimate, TableFamily, TrajectorySample};
pub use symbol::{PlaneWord, Symbol};
pub use table::{Row, StepProbabilityTable};
pub use walk::{LatticeConfig, MomentReport, StepVector, Vec3};
