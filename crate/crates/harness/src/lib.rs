//! Experiment scans, acceptance checks and result serialization on top of
//! [`cwglauber`].

pub mod error;
pub mod limit_law;
pub mod report;
pub mod scans;
pub mod spec;
pub mod verify;

pub use error::{HarnessError, Result};
pub use report::{RunReport, Status, Verdict};
pub use spec::{ExperimentKind, ExperimentSpec, OutputFormat};
