//! Statistical acceptance tests of the limit theorems over simulated ensembles.

mod clt;
mod ratio;
mod slln;
mod structure;
mod zconv;

pub use clt::{subordinated_oracle, verify_clt, CltComparison, CltSetup, CLT_MOMENT_TOL, KS_LEVEL};
pub use ratio::{small_variation_rate, verify_ratio_ergodic, RatioOutcome, RATIO_TOL};
pub use slln::{regime, verify_slln, Regime, SllnOutcome, SllnRow, M1_ZERO, SLLN_TOL};
pub use structure::{verify_structure, StructureSetup};
pub use zconv::{verify_z_convergence, ZSetup};
