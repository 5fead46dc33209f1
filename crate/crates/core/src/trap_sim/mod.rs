//! Two-clump Penning-trap dynamics with a rotating wall.
//!
//! Simulation units: `m = e = 1` by default and `beta = e^2/4`.

pub mod mathieu;
pub mod modes;
pub mod params;
pub mod spectral;

pub use mathieu::{
    averaged_hamiltonian, center_offset_constant, floquet, integrate_mathieu, stability_scan, Band, Floquet,
    MathieuSolution, ScanCell, StabilityScan,
};
pub use modes::{
    integrate_rotating_frame, mode_frequencies, printed_lambda_expression, random_stable_params, ModeSolution,
    Trajectory,
};
pub use params::{derive_params, equilibrium_radius, stroboscopic_lock, TrapInputs, TrapParams};
pub use spectral::{extract_frequencies, Peak};
