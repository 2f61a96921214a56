pub mod calc;
pub mod curves;
pub mod fit;
pub mod foveate;
pub mod simulate;

use retina_limit::ColorChannel;

pub fn parse_channel(s: &str) -> Result<ColorChannel, String> {
    s.parse().map_err(|e: retina_limit::Error| e.to_string())
}

/// Largest eccentricity covered by measurements; beyond it the model
/// extrapolates.
pub const MEASURED_ECCENTRICITY_DEG: f64 = 20.0;

pub fn warn_extrapolation(ecc: f64) {
    if ecc > MEASURED_ECCENTRICITY_DEG {
        log::warn!("eccentricity {ecc} deg is beyond the measured 0-{MEASURED_ECCENTRICITY_DEG} deg range; the model extrapolates");
    }
}
