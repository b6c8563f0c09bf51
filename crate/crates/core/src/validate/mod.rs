//! Independent checks on dispatch results: Newton–Raphson power flow, rank-1 voltage
//! recovery, and the two-node sensitivity analysis.

mod eigen;
mod newton;
mod sensitivity;

use thiserror::Error;

pub use eigen::{extract_voltages, jacobi_eigen, RecoveredVoltages, RANK_TOL};
pub use newton::{house_injections, newton_power_flow, newton_pu, PowerFlowResult, MAX_ITER, TOLERANCE};
pub use sensitivity::{
    decoupling_norms, finite_difference_jacobian, injections, sensitivity_matrix, write_sensitivity_csv,
    OperatingPoint, SensitivityBlock, INCONSISTENT_ENTRIES,
};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("power flow diverged (max mismatch {mismatch:e} pu)")]
    Diverged { mismatch: f64 },
    #[error("singular power-flow Jacobian")]
    SingularJacobian,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },
    #[error("length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("voltage magnitudes must be positive")]
    InvalidOperatingPoint,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
