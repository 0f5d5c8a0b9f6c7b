//! How quickly compound growth in data-centre demand cancels a one-off
//! emission reduction.

use crate::model::{check, ModelError, HOURS_PER_YEAR};

/// Years of growth at `annual_growth` that a relative `reduction` offsets,
/// i.e. `t` with `(1 + g)^t * (1 - r) = 1`.
pub fn years_compensated(reduction: f64, annual_growth: f64) -> Result<f64, ModelError> {
    check(
        "reduction",
        reduction,
        (0.0..1.0).contains(&reduction),
        "[0, 1)",
    )?;
    check(
        "annual_growth",
        annual_growth,
        annual_growth > 0.0,
        "(0, inf)",
    )?;
    Ok(-(-reduction).ln_1p() / annual_growth.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityProjection {
    pub power_gw: f64,
    /// Energy at continuous full draw over a year.
    pub annual_energy_twh: f64,
}

pub fn capacity_projection(
    base_power_gw: f64,
    annual_growth: f64,
    years: u32,
) -> Result<CapacityProjection, ModelError> {
    check(
        "base_power_gw",
        base_power_gw,
        base_power_gw > 0.0,
        "(0, inf)",
    )?;
    check(
        "annual_growth",
        annual_growth,
        annual_growth >= 0.0,
        "[0, inf)",
    )?;
    let power_gw = base_power_gw * growth_factor(annual_growth, years);
    Ok(CapacityProjection {
        power_gw,
        annual_energy_twh: power_gw * HOURS_PER_YEAR / 1000.0,
    })
}

pub fn growth_factor(annual_growth: f64, years: u32) -> f64 {
    (1.0 + annual_growth).powi(years as i32)
}
