//! Optimal solvers for combined target assignment and path finding (TAPF).
//!
//! Two high-level searches share one low-level planner:
//!
//! * [`solver::itacbs`] keeps a single constraint tree whose nodes carry a
//!   full agent-by-target cost matrix and re-optimise the assignment
//!   incrementally after every branch.
//! * [`solver::cbsta`] runs plain CBS inside a forest of constraint trees,
//!   one per assignment, generating roots lazily from a K-best enumerator.
//!
//! [`validate`] and [`oracle`] provide solver-independent checking, and
//! [`bench`] generates benchmark scenarios and runs head-to-head comparisons.

pub mod assignment;
pub mod bench;
pub mod cost;
pub mod gridmap;
pub mod lowlevel;
pub mod oracle;
pub mod plan_io;
pub mod solver;
pub mod validate;

pub use cost::Cost;
pub use gridmap::{GridMap, TapfInstance, Vertex};
