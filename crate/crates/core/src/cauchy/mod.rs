//! The whole-space problem on a truncated box: evolution, spreading
//! diagnostics, front shifts and the comparison functions built from fronts.

pub mod domain;
pub mod evolve;
pub mod shift;
pub mod snapshot;
pub mod spread;
pub mod supersolution;

pub use domain::TruncatedDomain;
pub use evolve::{evolve_cauchy, CauchyRecord, CauchyRun, Snapshot};
pub use shift::{front_shift, profile_convergence_error, FrontShift};
pub use snapshot::{SnapshotFile, SnapshotManifest};
pub use spread::{check_local_persistence, estimate_spreading_speed, PersistenceReport, SpreadEstimate, SpreadOutcome};
pub use supersolution::{Claim31, Claim41, ResidualGrid, ResidualReport, SandwichReport};
