//! Experiment harness: decay measurements of `‖1_{Σ^c} T f‖_p`, slope fits,
//! decomposition and unconditionality checks, brute-force oracles and CSV output.

pub mod checks;
pub mod config;
pub mod decay;
pub mod error;
pub mod family;
pub mod oracle;
pub mod output;
pub mod signs;
pub mod slope;

pub use config::{Derived, ExperimentConfig};
pub use decay::{run_decay, DecayRow, DecayRun, RowStatus};
pub use error::{HarnessError, Result};
pub use family::{gen_family, Profile};
pub use signs::SignVector;
pub use slope::{fit_slope, SlopeFit};
