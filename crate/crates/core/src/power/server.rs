//! Weighted-sum server power model and its least-squares calibration.
//!
//! Energy for one server over a period is estimated as
//!
//! ```text
//! E = intercept + w_cpu·u + w_cache·cache + w_dram·dram + w_disk·disk
//! ```
//!
//! with `u` the average CPU utilization and the other regressors in raw
//! bytes. The intercept carries idle power. Weights are fitted per device
//! model from benchmark samples by ordinary least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ServerUsageRow;
use crate::units::EnergyWh;

/// Regressors plus intercept.
const COEFFICIENTS: usize = 5;
const REGRESSORS: usize = COEFFICIENTS - 1;
/// Singular-value ratio below which the normalized design counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerPowerModel {
    pub device_model: String,
    /// Wh, idle draw over the period.
    pub intercept: f64,
    /// Wh per unit utilization.
    pub w_cpu: f64,
    /// Wh per byte.
    pub w_cache: f64,
    /// Wh per byte.
    pub w_dram: f64,
    /// Wh per byte.
    pub w_disk: f64,
    pub adjusted_r2: f64,
}

/// One benchmark observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    pub cpu_utilization: f64,
    pub cache_moved: f64,
    pub dram_accessed: f64,
    pub disk_moved: f64,
    pub measured_energy: EnergyWh,
}

impl CalibrationSample {
    fn regressors(&self) -> [f64; REGRESSORS] {
        [self.cpu_utilization, self.cache_moved, self.dram_accessed, self.disk_moved]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{model}: need at least {} samples, got {got}", COEFFICIENTS + 1)]
    InsufficientSamples { model: String, got: usize },
    #[error("{model}: design matrix is singular (constant or collinear regressor)")]
    SingularDesign { model: String },
    #[error("{model}: sample {index} has a non-finite or out-of-range value")]
    InvalidSample { model: String, index: usize },
}

impl FitError {
    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            FitError::InsufficientSamples { .. } => "InsufficientSamples",
            FitError::SingularDesign { .. } => "SingularDesign",
            FitError::InvalidSample { .. } => "InvalidSample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("row for device {device_id} has model {row_model:?} but the power model is for {model:?}")]
pub struct ModelMismatch {
    pub device_id: String,
    pub row_model: String,
    pub model: String,
}

/// Result of one server estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerEstimate {
    pub energy: EnergyWh,
    /// True when the raw prediction was negative and got clamped to zero.
    pub clamped: bool,
}

/// Fits the weights for one device model by ordinary least squares.
///
/// Columns are scaled to unit max-magnitude before solving so byte counters
/// in the 1e10 range and utilizations in `[0, 1]` are equally conditioned;
/// coefficients are rescaled on output.
pub fn fit_server_weights(device_model: &str, samples: &[CalibrationSample]) -> Result<ServerPowerModel, FitError> {
    let n = samples.len();
    if n < COEFFICIENTS + 1 {
        return Err(FitError::InsufficientSamples { model: device_model.to_string(), got: n });
    }
    for (index, s) in samples.iter().enumerate() {
        let ok = s.regressors().iter().all(|v| v.is_finite() && *v >= 0.0) && s.cpu_utilization <= 1.0;
        if !ok {
            return Err(FitError::InvalidSample { model: device_model.to_string(), index });
        }
    }

    let mut scale = [1.0; COEFFICIENTS];
    for j in 0..REGRESSORS {
        let max = samples.iter().map(|s| s.regressors()[j].abs()).fold(0.0, f64::max);
        if max == 0.0 {
            return Err(FitError::SingularDesign { model: device_model.to_string() });
        }
        scale[j + 1] = max;
    }

    let design =
        DMatrix::from_fn(n, COEFFICIENTS, |i, j| if j == 0 { 1.0 } else { samples[i].regressors()[j - 1] / scale[j] });
    let target = DVector::from_iterator(n, samples.iter().map(|s| s.measured_energy.value()));

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if max_sv.is_nan() || max_sv <= 0.0 || min_sv / max_sv < RANK_TOLERANCE {
        return Err(FitError::SingularDesign { model: device_model.to_string() });
    }
    let beta = svd.solve(&target, 0.0).map_err(|_| FitError::SingularDesign { model: device_model.to_string() })?;

    let fitted = &design * &beta;
    let mean = target.mean();
    let ss_res: f64 = target.iter().zip(fitted.iter()).map(|(y, f)| (y - f).powi(2)).sum();
    let ss_tot: f64 = target.iter().map(|y| (y - mean).powi(2)).sum();

    let coef: Vec<f64> = (0..COEFFICIENTS).map(|j| beta[j] / scale[j]).collect();
    let model = ServerPowerModel {
        device_model: device_model.to_string(),
        intercept: coef[0],
        w_cpu: coef[1],
        w_cache: coef[2],
        w_dram: coef[3],
        w_disk: coef[4],
        adjusted_r2: adjusted_r_squared(ss_res, ss_tot, n, REGRESSORS),
    };
    if !coef.iter().all(|c| c.is_finite()) {
        return Err(FitError::SingularDesign { model: device_model.to_string() });
    }
    Ok(model)
}

/// `1 − (1 − R²)(n − 1)/(n − p − 1)`. A constant target that is fitted
/// exactly counts as a perfect fit.
pub fn adjusted_r_squared(ss_res: f64, ss_tot: f64, n: usize, p: usize) -> f64 {
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0)
}

impl ServerPowerModel {
    /// Raw weighted sum, unclamped.
    pub fn predict(&self, cpu: f64, cache: f64, dram: f64, disk: f64) -> f64 {
        self.intercept + self.w_cpu * cpu + self.w_cache * cache + self.w_dram * dram + self.w_disk * disk
    }

    /// Multiplies every coefficient by `k`, i.e. scales every prediction by `k`.
    pub fn scaled(&self, k: f64) -> ServerPowerModel {
        ServerPowerModel {
            intercept: self.intercept * k,
            w_cpu: self.w_cpu * k,
            w_cache: self.w_cache * k,
            w_dram: self.w_dram * k,
            w_disk: self.w_disk * k,
            ..self.clone()
        }
    }
}

/// Estimates one server's energy for the period. Negative predictions are
/// clamped to zero and logged.
pub fn estimate_server_energy(model: &ServerPowerModel, row: &ServerUsageRow) -> Result<ServerEstimate, ModelMismatch> {
    if row.device_model != model.device_model {
        return Err(ModelMismatch {
            device_id: row.device_id.clone(),
            row_model: row.device_model.clone(),
            model: model.device_model.clone(),
        });
    }
    let raw = model.predict(row.cpu_utilization, row.cache_moved, row.dram_accessed, row.disk_moved);
    if raw < 0.0 || !raw.is_finite() {
        log::warn!(
            "{}/{}: predicted energy {raw} Wh clamped to 0 (model {})",
            row.datacenter_id,
            row.device_id,
            model.device_model
        );
        return Ok(ServerEstimate { energy: EnergyWh::ZERO, clamped: true });
    }
    Ok(ServerEstimate { energy: EnergyWh::new(raw).unwrap_or_default(), clamped: false })
}
