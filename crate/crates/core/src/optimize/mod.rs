//! Derivative-free optimizers: bracketed scalar minimization and seeded
//! differential evolution with a simplex polish.

mod de;
mod scalar;

pub use de::{differential_evolution, nelder_mead, BatchObjective, DeConfig, DeReport, Sequential};
pub use scalar::{brent_minimize, scan_then_brent, ScalarMinimum};
