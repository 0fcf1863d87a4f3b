//! Selective multi-threshold (Selective-MT) leakage-reduction flow for
//! placed gate-level netlists: slack-driven Vth assignment, output-holder
//! insertion, shared sleep-switch clustering and sizing under voltage-bounce
//! / wirelength / electromigration limits, simulated post-route extraction
//! with re-optimization, and three-way Dual-Vth vs conventional vs improved
//! Selective-MT reporting.

pub mod assign;
pub mod error;
pub mod flow;
pub mod generator;
pub mod interconnect;
pub mod io;
pub mod library;
pub mod model;
pub mod morton;
pub mod svg;
pub mod timing;
pub mod transform;
pub mod validate;

pub use error::{Diagnostic, Result, SmtError};
pub use model::{Design, FlowStage, VthVariant};
