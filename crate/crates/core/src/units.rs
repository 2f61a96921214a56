//! Acuity units and display geometry.
//!
//! Angles are visual degrees at every public boundary and radians only inside
//! the trigonometry. A Snellen fraction is stored as one ratio (20/40 = 0.5),
//! never as a numerator/denominator pair.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Pixels per degree equivalent to a 1 arcmin minimum angle of resolution.
pub const PPD_PER_SNELLEN: f64 = 60.0;

/// Metres per inch.
pub const METERS_PER_INCH: f64 = 0.0254;

/// Width of the 27" 16:9 reference monitor (0.6858 m diagonal).
pub const REFERENCE_27IN_WIDTH_M: f64 = 0.5977;

/// An angle in visual degrees.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(pub f64);

impl Angle {
    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn from_radians(rad: f64) -> Self {
        Angle(rad.to_degrees())
    }

    /// Validates the angle as a retinal eccentricity (finite, non-negative).
    pub fn eccentricity(deg: f64) -> Result<Self> {
        if !deg.is_finite() || deg < 0.0 {
            return Err(domain(format!("eccentricity must be finite and >= 0, got {deg}")));
        }
        Ok(Angle(deg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcuityKind {
    SnellenFraction,
    LogMar,
    Ppd,
}

/// Visual acuity in one of its common representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AcuityValue {
    /// Test distance over the distance at which a standard eye reads the line.
    SnellenFraction(f64),
    /// log10 of the minimum angle of resolution in arcminutes.
    LogMar(f64),
    /// Pixels per visual degree.
    Ppd(f64),
}

impl AcuityValue {
    pub fn new(kind: AcuityKind, value: f64) -> Result<Self> {
        let v = match kind {
            AcuityKind::SnellenFraction => AcuityValue::SnellenFraction(value),
            AcuityKind::LogMar => AcuityValue::LogMar(value),
            AcuityKind::Ppd => AcuityValue::Ppd(value),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn kind(&self) -> AcuityKind {
        match self {
            AcuityValue::SnellenFraction(_) => AcuityKind::SnellenFraction,
            AcuityValue::LogMar(_) => AcuityKind::LogMar,
            AcuityValue::Ppd(_) => AcuityKind::Ppd,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            AcuityValue::SnellenFraction(v) | AcuityValue::LogMar(v) | AcuityValue::Ppd(v) => v,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            AcuityValue::SnellenFraction(s) => positive("Snellen fraction", s).map(|_| ()),
            AcuityValue::Ppd(p) => positive("ppd", p).map(|_| ()),
            AcuityValue::LogMar(m) => finite("logMAR", m).map(|_| ()),
        }
    }

    pub fn to_snellen(&self) -> Result<f64> {
        match *self {
            AcuityValue::SnellenFraction(s) => positive("Snellen fraction", s),
            AcuityValue::LogMar(m) => logmar_to_snellen(m),
            AcuityValue::Ppd(p) => ppd_to_snellen(p),
        }
    }

    pub fn to_logmar(&self) -> Result<f64> {
        match *self {
            AcuityValue::SnellenFraction(s) => snellen_to_logmar(s),
            AcuityValue::LogMar(m) => finite("logMAR", m),
            AcuityValue::Ppd(p) => ppd_to_logmar(p),
        }
    }

    pub fn to_ppd(&self) -> Result<f64> {
        match *self {
            AcuityValue::SnellenFraction(s) => snellen_to_ppd(s),
            AcuityValue::LogMar(m) => logmar_to_ppd(m),
            AcuityValue::Ppd(p) => positive("ppd", p),
        }
    }

    /// Re-expresses the value in another unit.
    pub fn convert(&self, kind: AcuityKind) -> Result<AcuityValue> {
        Ok(match kind {
            AcuityKind::SnellenFraction => AcuityValue::SnellenFraction(self.to_snellen()?),
            AcuityKind::LogMar => AcuityValue::LogMar(self.to_logmar()?),
            AcuityKind::Ppd => AcuityValue::Ppd(self.to_ppd()?),
        })
    }
}

impl fmt::Display for AcuityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcuityValue::SnellenFraction(s) => write!(f, "Snellen {s:.4}"),
            AcuityValue::LogMar(m) => write!(f, "logMAR {m:.4}"),
            AcuityValue::Ppd(p) => write!(f, "{p:.2} ppd"),
        }
    }
}

fn positive(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(domain(format!("{what} must be finite and > 0, got {v}")))
    }
}

fn finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{what} must be finite, got {v}")))
    }
}

pub fn snellen_to_logmar(s: f64) -> Result<f64> {
    Ok(-positive("Snellen fraction", s)?.log10())
}

pub fn logmar_to_snellen(m: f64) -> Result<f64> {
    Ok(10f64.powf(-finite("logMAR", m)?))
}

pub fn snellen_to_ppd(s: f64) -> Result<f64> {
    Ok(PPD_PER_SNELLEN * positive("Snellen fraction", s)?)
}

pub fn ppd_to_snellen(ppd: f64) -> Result<f64> {
    Ok(positive("ppd", ppd)? / PPD_PER_SNELLEN)
}

pub fn logmar_to_ppd(m: f64) -> Result<f64> {
    Ok(PPD_PER_SNELLEN / 10f64.powf(finite("logMAR", m)?))
}

pub fn ppd_to_logmar(ppd: f64) -> Result<f64> {
    Ok((PPD_PER_SNELLEN / positive("ppd", ppd)?).log10())
}

/// Physical display and viewer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub width_m: f64,
    pub height_m: f64,
    pub h_pixels: u32,
    pub v_pixels: u32,
    pub viewing_distance_m: f64,
}

impl DisplayGeometry {
    /// Validates all fields. A pixel aspect ratio more than 2% off square is
    /// logged, not rejected.
    pub fn new(width_m: f64, height_m: f64, h_pixels: u32, v_pixels: u32, viewing_distance_m: f64) -> Result<Self> {
        positive("display width", width_m)?;
        positive("display height", height_m)?;
        positive("viewing distance", viewing_distance_m)?;
        if h_pixels == 0 || v_pixels == 0 {
            return Err(domain("pixel counts must be > 0"));
        }
        let g = DisplayGeometry {
            width_m,
            height_m,
            h_pixels,
            v_pixels,
            viewing_distance_m,
        };
        let mismatch = g.aspect_mismatch();
        if mismatch > 0.02 {
            log::warn!(
                "display aspect {:.4} differs from pixel aspect {:.4} by {:.1}%",
                width_m / height_m,
                h_pixels as f64 / v_pixels as f64,
                mismatch * 100.0
            );
        }
        Ok(g)
    }

    /// Builds a geometry from the diagonal, assuming square pixels.
    pub fn from_diagonal(diagonal_m: f64, h_pixels: u32, v_pixels: u32, viewing_distance_m: f64) -> Result<Self> {
        positive("diagonal", diagonal_m)?;
        let aspect = h_pixels as f64 / v_pixels.max(1) as f64;
        let height = diagonal_m / (1.0 + aspect * aspect).sqrt();
        Self::new(height * aspect, height, h_pixels, v_pixels, viewing_distance_m)
    }

    /// 27" 16:9 3840x2160 monitor used as the moving display.
    pub fn reference_27in_4k(viewing_distance_m: f64) -> Result<Self> {
        let width = REFERENCE_27IN_WIDTH_M;
        Self::new(width, width * 9.0 / 16.0, 3840, 2160, viewing_distance_m)
    }

    /// Relative difference between physical and pixel aspect ratios.
    pub fn aspect_mismatch(&self) -> f64 {
        let physical = self.width_m / self.height_m;
        let pixel = self.h_pixels as f64 / self.v_pixels as f64;
        (physical / pixel - 1.0).abs()
    }

    pub fn pixel_pitch_m(&self) -> f64 {
        self.width_m / self.h_pixels as f64
    }

    pub fn with_distance(&self, viewing_distance_m: f64) -> Self {
        DisplayGeometry {
            viewing_distance_m,
            ..*self
        }
    }

    /// Viewing distance in multiples of the display height.
    pub fn distance_in_heights(&self) -> f64 {
        self.viewing_distance_m / self.height_m
    }
}

/// Pixels per degree at the centre of the screen.
pub fn center_ppd(g: &DisplayGeometry) -> f64 {
    ppd_for_pitch(g.pixel_pitch_m(), g.viewing_distance_m)
}

/// Same as [`center_ppd`] but using the vertical pixel pitch.
pub fn center_ppd_vertical(g: &DisplayGeometry) -> f64 {
    ppd_for_pitch(g.height_m / g.v_pixels as f64, g.viewing_distance_m)
}

/// Centre-of-screen ppd for a pixel pitch seen from `distance_m`.
pub fn ppd_for_pitch(pitch_m: f64, distance_m: f64) -> f64 {
    PI / (360.0 * (0.5 * pitch_m / distance_m).atan())
}

/// Viewing distance at which a pixel pitch yields `ppd` at the screen centre.
pub fn distance_for_ppd(pitch_m: f64, ppd: f64) -> f64 {
    0.5 * pitch_m / (PI / (360.0 * ppd)).tan()
}

/// Vertical pixel count at which a display seen from `distance_in_heights`
/// display heights reaches `threshold_ppd` at its centre. Not rounded.
pub fn required_lines(distance_in_heights: f64, threshold_ppd: f64) -> Result<f64> {
    positive("distance in heights", distance_in_heights)?;
    positive("threshold ppd", threshold_ppd)?;
    Ok(0.5 / (distance_in_heights * (PI / (360.0 * threshold_ppd)).tan()))
}

/// Pixel density (pixels per inch) at which one pixel subtends
/// `1/threshold_ppd` degrees from `distance_m`.
pub fn required_ppi(distance_m: f64, threshold_ppd: f64) -> Result<f64> {
    positive("distance", distance_m)?;
    positive("threshold ppd", threshold_ppd)?;
    let pitch = distance_m * (PI / (180.0 * threshold_ppd)).tan();
    Ok(METERS_PER_INCH / pitch)
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn snellen_logmar_anchors() {
        assert!((snellen_to_logmar(0.5).unwrap() - 0.3010).abs() < 5e-5);
        assert_eq!(snellen_to_logmar(1.0).unwrap(), 0.0);
        assert!((snellen_to_logmar(2.0).unwrap() + 0.30103).abs() < 5e-6);
        assert!(snellen_to_logmar(0.0).is_err());
        assert!(snellen_to_logmar(-1.0).is_err());
    }

    #[test]
    fn snellen_ppd_anchors() {
        assert_eq!(snellen_to_ppd(1.0).unwrap(), 60.0);
        assert_eq!(snellen_to_ppd(2.0).unwrap(), 120.0);
        assert_eq!(snellen_to_ppd(0.5).unwrap(), 30.0);
        assert!(snellen_to_ppd(0.0).is_err());
    }

    #[test]
    fn logmar_ppd_values() {
        assert_eq!(logmar_to_ppd(0.0).unwrap(), 60.0);
        assert!((logmar_to_ppd(0.3010).unwrap() - 30.0).abs() < 0.01);
        assert!((logmar_to_ppd(-0.3010).unwrap() - 119.97).abs() < 0.05);
        assert!(logmar_to_ppd(f64::NAN).is_err());
        assert!(logmar_to_ppd(f64::INFINITY).is_err());
    }

    #[test]
    fn acuity_value_rejects_invalid() {
        assert!(AcuityValue::new(AcuityKind::Ppd, -3.0).is_err());
        assert!(AcuityValue::new(AcuityKind::SnellenFraction, 0.0).is_err());
        assert!(AcuityValue::new(AcuityKind::LogMar, -0.2).is_ok());
    }

    #[test]
    fn center_ppd_4k_27in_at_1m() {
        let g = DisplayGeometry::new(0.596, 0.596 * 9.0 / 16.0, 3840, 2160, 1.0).unwrap();
        assert!((center_ppd(&g) - 112.4).abs() < 0.2, "{}", center_ppd(&g));
    }

    #[test]
    fn fhd_at_3_2_heights_is_about_60_ppd() {
        let h = 1.0;
        let g = DisplayGeometry::new(h * 16.0 / 9.0, h, 1920, 1080, 3.2 * h).unwrap();
        let v = center_ppd_vertical(&g);
        assert!((v - 60.3).abs() < 0.3, "{v}");
        assert!(rel(center_ppd(&g), v) < 1e-12);
    }

    #[test]
    fn required_lines_examples() {
        let n = required_lines(3.2, 60.3).unwrap();
        assert!((n - 1080.0).abs() < 2.0, "{n}");
        let n = required_lines(6.2, 117.2).unwrap();
        assert!((n - 1080.0).abs() < 15.0, "{n}");
        let a = required_lines(2.0, 90.0).unwrap();
        let b = required_lines(4.0, 90.0).unwrap();
        assert!(rel(b, a / 2.0) < 0.005);
        assert!(required_lines(0.0, 60.0).is_err());
    }

    #[test]
    fn required_ppi_examples() {
        let p = required_ppi(0.35, 94.0).unwrap();
        assert!((p - 391.0).abs() < 2.0, "{p}");
        let p = required_ppi(0.35, 65.0).unwrap();
        assert!((p - 270.0).abs() < 2.0, "{p}");
        let a = required_ppi(0.5, 80.0).unwrap();
        let b = required_ppi(1.0, 80.0).unwrap();
        assert!(rel(b, a / 2.0) < 0.005);
    }

    #[test]
    fn distance_for_ppd_inverts_center_ppd() {
        let g = DisplayGeometry::reference_27in_4k(1.4).unwrap();
        let ppd = center_ppd(&g);
        let d = distance_for_ppd(g.pixel_pitch_m(), ppd);
        assert!(rel(d, 1.4) < 1e-12);
    }

    #[test]
    fn degrees_at_boundary_radians_inside() {
        let a = Angle(180.0);
        assert!((a.radians() - PI).abs() < 1e-15);
        assert_eq!(Angle::from_radians(PI / 2.0).degrees(), 90.0);
        assert!(Angle::eccentricity(-1.0).is_err());
        // ppd_for_pitch takes metres, returns per-degree: 1 px of pitch d*tan(1deg) spans 1 degree.
        let pitch = 2.0 * (0.5f64).to_radians().tan();
        assert!((ppd_for_pitch(pitch, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometry_validation() {
        assert!(DisplayGeometry::new(0.0, 1.0, 10, 10, 1.0).is_err());
        assert!(DisplayGeometry::new(1.0, 1.0, 0, 10, 1.0).is_err());
        // aspect mismatch is only a warning
        let g = DisplayGeometry::new(1.0, 1.0, 1920, 1080, 1.0).unwrap();
        assert!(g.aspect_mismatch() > 0.02);
        let d = DisplayGeometry::from_diagonal(0.6858, 3840, 2160, 1.0).unwrap();
        assert!((d.width_m - REFERENCE_27IN_WIDTH_M).abs() < 1e-3);
    }
}
