//! Per-device energy estimation.

mod files;
mod network;
mod server;
mod shared;

pub use files::{read_calibration_samples, read_models, write_calibration_samples, write_models, ModelSet};
pub use network::{estimate_network_energy, network_energy_for_bytes, WH_PER_BYTE};
pub use server::{
    adjusted_r_squared, estimate_server_energy, fit_server_weights, CalibrationSample, FitError, ModelMismatch,
    ServerEstimate, ServerPowerModel, RANK_TOLERANCE,
};
pub use shared::{allocate_shared_energy, shared_energy_ratio, ShareError};
