//! Interactive Pareto iterated local search for multi-objective 0/1 knapsack
//! problems.
//!
//! The crate is organized along the interactive optimization loop:
//!
//! * [`model`]: instances, solutions, evaluation and dominance.
//! * [`bounds`]: weighted-sum lower and upper bound sets shown before search.
//! * [`archive`]: the nondominated archive and its reference-point cone.
//! * [`engine`]: the Pareto iterated local search driven by the cone.
//! * [`exact`]: exact fronts used as ground truth.
//! * [`metrics`]: the fraction of the cone's efficient outcomes found.
//! * [`session`] and [`service`]: the long-running interactive service and its
//!   JSON wire protocol.
//! * [`instance_io`] and [`experiment`]: file formats and the batch harness.

pub mod archive;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod fixtures;
pub mod instance_io;
pub mod metrics;
pub mod model;
pub mod service;
pub mod session;

pub use archive::{ArchiveSnapshot, InsertOutcome, ParetoArchive, ReferencePoint};
pub use bounds::{BoundSets, WeightVector};
pub use engine::{Engine, RunLog, SearchConfig};
pub use error::{Error, Result};
pub use exact::ExactFront;
pub use model::{Instance, ObjectiveVector, Solution};
pub use service::Service;
pub use session::{Session, SessionConfig, SessionEvent, SessionState};
