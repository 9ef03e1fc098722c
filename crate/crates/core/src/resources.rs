//! Modeled energy and emissions.
//!
//! Energy is wall-clock time multiplied by a configured average power;
//! emissions are energy multiplied by a grid carbon intensity. Remote LLM
//! endpoints expose no power telemetry, so every report carries the
//! profile's `source_note` alongside the numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::ClassificationOutcome;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResourceError {
    #[error("execution time {0} s is negative or not finite")]
    NegativeTime(f64),
    #[error("energy {0} Wh is negative or not finite")]
    NegativeEnergy(f64),
    #[error("no outcomes to aggregate")]
    Empty,
    #[error("invalid power profile `{profile_id}`: {reason}")]
    InvalidProfile { profile_id: String, reason: String },
    #[error("cannot read power profile {path}: {reason}")]
    Load { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerProfile {
    pub profile_id: String,
    /// Average draw attributed to one call, in watts.
    pub avg_power_w: f64,
    pub carbon_intensity_g_per_kwh: f64,
    /// Where the constants came from.
    pub source_note: String,
}

pub const PLACEHOLDER_PROFILE_ID: &str = "placeholder";

impl PowerProfile {
    /// Unit constants for dry runs. Override for any reported numbers.
    pub fn placeholder() -> Self {
        Self {
            profile_id: PLACEHOLDER_PROFILE_ID.into(),
            avg_power_w: 1.0,
            carbon_intensity_g_per_kwh: 0.0,
            source_note: "placeholder constants; configure a measured or cited profile before \
                          reporting energy or emissions"
                .into(),
        }
    }

    pub fn is_placeholder(&self) -> bool {
        self.profile_id == PLACEHOLDER_PROFILE_ID
    }

    pub fn validate(&self) -> Result<(), ResourceError> {
        let fail = |reason: &str| {
            Err(ResourceError::InvalidProfile {
                profile_id: self.profile_id.clone(),
                reason: reason.into(),
            })
        };
        if !(self.avg_power_w.is_finite() && self.avg_power_w > 0.0) {
            return fail("avg_power_w must be > 0");
        }
        if !(self.carbon_intensity_g_per_kwh.is_finite() && self.carbon_intensity_g_per_kwh >= 0.0)
        {
            return fail("carbon_intensity_g_per_kwh must be >= 0");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ResourceError> {
        let load_err = |reason: String| ResourceError::Load {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let profile: PowerProfile =
            toml::from_str(&text).map_err(|e| load_err(e.message().to_string()))?;
        profile.validate()?;
        Ok(profile)
    }
}

pub fn energy_wh(exec_time_s: f64, profile: &PowerProfile) -> Result<f64, ResourceError> {
    if !(exec_time_s.is_finite() && exec_time_s >= 0.0) {
        return Err(ResourceError::NegativeTime(exec_time_s));
    }
    Ok(profile.avg_power_w * (exec_time_s / SECONDS_PER_HOUR))
}

pub fn co2_grams(energy_wh: f64, profile: &PowerProfile) -> Result<f64, ResourceError> {
    if !(energy_wh.is_finite() && energy_wh >= 0.0) {
        return Err(ResourceError::NegativeEnergy(energy_wh));
    }
    Ok(energy_wh / 1000.0 * profile.carbon_intensity_g_per_kwh)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSummary {
    pub avg_exec_time_s: f64,
    /// Energy of the average call.
    pub avg_energy_wh: f64,
    /// Sum of per-call emissions.
    pub total_co2_g: f64,
}

pub fn aggregate_resources(
    outcomes: &[ClassificationOutcome],
    profile: &PowerProfile,
) -> Result<ResourceSummary, ResourceError> {
    aggregate_times(outcomes.iter().map(|o| o.exec_time_s), profile)
}

/// Same as [`aggregate_resources`] over bare execution times.
pub fn aggregate_times(
    times: impl IntoIterator<Item = f64>,
    profile: &PowerProfile,
) -> Result<ResourceSummary, ResourceError> {
    let mut n = 0usize;
    let mut time_sum = 0.0;
    let mut total_co2_g = 0.0;
    for t in times {
        total_co2_g += co2_grams(energy_wh(t, profile)?, profile)?;
        time_sum += t;
        n += 1;
    }
    if n == 0 {
        return Err(ResourceError::Empty);
    }
    let avg_exec_time_s = time_sum / n as f64;
    Ok(ResourceSummary {
        avg_exec_time_s,
        avg_energy_wh: energy_wh(avg_exec_time_s, profile)?,
        total_co2_g,
    })
}
