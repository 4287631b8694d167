//! Tensor ring decomposition: recovering quadratic units from their second
//! and third moments.

pub mod combo;
pub mod decompose;
pub mod extend;
pub mod gauge_fix;
pub mod jennrich;
pub mod verify;

pub use combo::{best_combo, combine, find_combo, validate_nondegeneracy, NonDegenCombo};
pub use decompose::{decompose, moment_residuals, Backend, RecoveryReport, TRConfig};
pub use extend::{extend_tail, TailSolver};
pub use gauge_fix::{gauge_fix, gauge_fix_rotation, gauge_fix_units};
pub use jennrich::{cubic_tensor, jennrich_diagonal};
pub use verify::{unit_matrix, verify_assumption_tr, TrAssumptionReport};
