//! Verification harness: check ids, canonical configs, evaluators, reports.

mod checks;
pub mod fd;
mod ids;
mod report;
mod spec;
mod suite;

pub use checks::{run_check, MIN_RATIO};
pub use ids::{CheckId, IdentityId, InequalityId, OracleId};
pub use report::{relative_residual, Row, Status, VerificationReport, MIN_WINDOW};
pub use spec::{canonical, default_suite, required_flow, AlphaSource, CheckParams, CheckRequest, CheckSpec, ModelParams};
pub use suite::{run_suite, SuiteOutcome, SummaryEntry};
