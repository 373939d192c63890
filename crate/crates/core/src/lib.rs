//! Linear-programming formulations of discrete-time infinite-horizon optimal
//! control on finite deterministic systems.
//!
//! The crate solves the discounted problem (value `V_α`) and the long-run
//! average problem (value `g*`) twice: by dynamic programming and by linear
//! programs over occupational measures. The two routes are checked against
//! each other, and the Abel/Cesàro limit relations between them are exercised
//! numerically.
//!
//! * [`model`]: finite systems from tables or grid discretization
//! * [`dp`]: Bellman backups, value iteration, finite-horizon recursion
//! * [`measures`]: occupational measures and the test-function metric
//! * [`lpcore`]: dense two-phase simplex with dual certificates
//! * [`lpform`]: the occupation-measure LPs and their duals
//! * [`tauberian`]: Abel/Cesàro means, horizon and good-start lemmas, sweeps
//! * [`cli`]: the `occlp` command-line front end

pub mod cli;
pub mod dp;
pub mod error;
pub mod lpcore;
pub mod lpform;
pub mod measures;
pub mod model;
pub mod report;
pub mod tauberian;

pub use dp::{Policy, ValueFunction, ValueTag};
pub use error::{DpError, FormError, LpError, MeasureError, ModelError, TauberianError};
pub use lpcore::{LPSolution, LpStatus, StandardFormLP};
pub use measures::{OccupationalMeasure, TestFunctionBasis};
pub use model::{FiniteControlSystem, GridSpec, TableRow};
pub use report::{Report, ReportRecord};
pub use tauberian::{BoundedSequence, SweepResult};
