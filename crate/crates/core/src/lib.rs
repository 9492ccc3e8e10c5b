//! Verification and recovery of local-minimum-principle certificates for
//! optimal control problems with one mixed state-control constraint
//! `G(x, u) ≤ 0` that may be nonregular (`G_u` can vanish where `G = 0`).
//!
//! - [`expr`]: expressions for `f`, `G`, `J` with symbolic derivatives.
//! - [`problem`]: problem data, trajectories on a time grid, analytic fixtures.
//! - [`measures`]: left-continuous BV functions, atom-plus-density measures.
//! - [`geometry`]: closure in measure, phase set, contact set, jump directions.
//! - [`lmp`]: the certificate checker.
//! - [`recovery`]: multipliers from a convex program over the discretized conditions.
//! - [`cones`]: approximate separation of polyhedral cones by linear programming.
//! - [`formats`]: versioned JSON documents.

pub mod cones;
pub mod expr;
pub mod formats;
pub mod geometry;
pub mod lmp;
pub mod measures;
pub mod par;
pub mod problem;
pub mod recovery;
