//! Branching random walks in random environment (BRWRE) on the integer lattice.
//!
//! The crate is organised around the objects one needs to study such a
//! process numerically:
//!
//! * [`environment`]: site laws, finitely dependent random environments and
//!   the standing conditions (branching, ellipticity, bounded mean, aperiodicity).
//! * [`expectation`]: exact quenched expected particle counts by a log-space
//!   dynamic program, plus the discrete Anderson-equation check.
//! * [`shape`]: passage times, reachable sets and shape estimates.
//! * [`growth`]: local growth exponent estimates, the set `B = {β ≥ 0}` and
//!   total population growth.
//! * [`classify`]: the convex transience criterion for i.i.d. environments.
//! * [`montecarlo`]: exact particle-level simulation with big-integer counts.

pub mod classify;
pub mod environment;
pub mod error;
pub mod expectation;
pub mod geometry;
pub mod growth;
pub mod lattice;
pub mod layer_io;
pub mod montecarlo;
pub mod rational;
pub mod rng;
pub mod shape;

pub use error::{Error, Result};
pub use lattice::{BoxRegion, Site, StepSet};
