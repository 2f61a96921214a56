//! Executable models of the resolution limits of human vision.
//!
//! The crate is organised around the questions a display engineer asks:
//!
//! - [`units`]: acuity and display-geometry conversions (Snellen, logMAR,
//!   pixels per degree, lines, pixels per inch).
//! - [`csf`]: the per-channel resolution-limit model, sensitivity as a
//!   function of eccentricity and spatial frequency, and its inversion to a
//!   threshold resolution.
//! - [`population`]: how thresholds spread across observers, with quantiles
//!   and "fraction of viewers for whom this display is retinal" queries.
//! - [`fitting`]: outlier rejection, psychometric maximum likelihood and
//!   nonlinear regression of the model from threshold data.
//! - [`psychophysics`]: a simulated 2IFC observer driven by a QUEST staircase
//!   and the moving-display planner used to realise arbitrary resolutions.
//! - [`foveate`]: eccentricity-dependent filtering of images in an opponent
//!   colour space using a Laplacian pyramid.
//!
//! Angles cross the public API in visual degrees, spatial frequencies in
//! cycles per degree (cpd) unless a function is explicitly about pixels per
//! degree (ppd). A resolution in ppd is twice its Nyquist frequency in cpd.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csf;
pub mod error;
pub mod fitting;
pub mod foveate;
pub mod normal;
pub mod population;
pub mod psychophysics;
pub mod units;

pub use csf::{ChannelParams, ColorChannel, ModelParamSet};
pub use error::{Error, Result};
pub use population::{PopulationModel, PopulationParams};
pub use units::{AcuityValue, Angle, DisplayGeometry};

/// Cube-root transform of spatial frequency (cpd) used wherever thresholds
/// are compared, fitted or spread across the population.
pub mod freq {
    /// `f(rho) = rho^(1/3)`.
    #[inline]
    pub fn forward(rho_cpd: f64) -> f64 {
        rho_cpd.cbrt()
    }

    /// `f^-1(x) = x^3`.
    #[inline]
    pub fn inverse(x: f64) -> f64 {
        x * x * x
    }

    /// Transformed value of a resolution given in pixels per degree.
    #[inline]
    pub fn from_ppd(ppd: f64) -> f64 {
        forward(ppd / 2.0)
    }

    /// Pixels per degree for a transformed value.
    #[inline]
    pub fn to_ppd(x: f64) -> f64 {
        2.0 * inverse(x)
    }
}
