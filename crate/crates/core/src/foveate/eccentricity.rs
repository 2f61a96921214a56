use serde::Serialize;

use super::Plane;
use crate::error::{Error, Result};
use crate::units::DisplayGeometry;

/// Where the eye is relative to the image and where it looks.
///
/// The eye sits on the screen normal through `eye_px` at `distance_m`;
/// pixels are square with side `pixel_pitch_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViewingConfig {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_m: f64,
    pub distance_m: f64,
    pub eye_px: (f64, f64),
    pub gaze_px: (f64, f64),
    /// Pixels per degree at the gaze point.
    pub image_ppd: f64,
}

impl ViewingConfig {
    /// Image shown 1:1 and centred on `display`, viewed from its
    /// configured distance along the normal through the screen centre.
    pub fn from_display(display: &DisplayGeometry, width: usize, height: usize, gaze_px: (f64, f64)) -> Result<Self> {
        let mut v = ViewingConfig {
            width,
            height,
            pixel_pitch_m: display.pixel_pitch_m(),
            distance_m: display.viewing_distance_m,
            eye_px: ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0),
            gaze_px,
            image_ppd: 0.0,
        };
        v.image_ppd = v.local_ppd(gaze_px);
        v.validate()?;
        Ok(v)
    }

    /// Viewing geometry with `ppd` pixels per degree at the gaze point, the
    /// eye looking straight at it.
    pub fn from_ppd(ppd: f64, width: usize, height: usize, gaze_px: (f64, f64)) -> Result<Self> {
        if !(ppd > 0.0 && ppd.is_finite()) {
            return Err(Error::InvalidInput(format!("ppd must be positive, got {ppd}")));
        }
        let distance_m = 1.0;
        let v = ViewingConfig {
            width,
            height,
            pixel_pitch_m: 2.0 * distance_m * (std::f64::consts::PI / (360.0 * ppd)).tan(),
            distance_m,
            eye_px: gaze_px,
            gaze_px,
            image_ppd: ppd,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn center_gaze(width: usize, height: usize) -> (f64, f64) {
        ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (gx, gy) = self.gaze_px;
        if !(gx >= 0.0 && gy >= 0.0 && gx <= self.width as f64 - 1.0 && gy <= self.height as f64 - 1.0) {
            return Err(Error::InvalidInput(format!(
                "gaze ({gx}, {gy}) outside the {}x{} image",
                self.width, self.height
            )));
        }
        if !(self.pixel_pitch_m > 0.0 && self.distance_m > 0.0 && self.image_ppd > 0.0) {
            return Err(Error::InvalidInput("viewing geometry must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    fn ray(&self, px: (f64, f64)) -> [f64; 3] {
        [
            (px.0 - self.eye_px.0) * self.pixel_pitch_m,
            (px.1 - self.eye_px.1) * self.pixel_pitch_m,
            self.distance_m,
        ]
    }

    /// Angle in degrees between the rays through two image points.
    pub fn angle_deg(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (u, v) = (self.ray(a), self.ray(b));
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        c.atan2(d).to_degrees()
    }

    /// Horizontal pixels per degree around `px`.
    pub fn local_ppd(&self, px: (f64, f64)) -> f64 {
        1.0 / self.angle_deg((px.0 - 0.5, px.1), (px.0 + 0.5, px.1))
    }

    pub fn eccentricity(&self, px: (f64, f64)) -> f64 {
        self.angle_deg(self.gaze_px, px)
    }
}

/// Per-pixel eccentricity in degrees, optionally quantised to rings.
#[derive(Debug, Clone, PartialEq)]
pub struct EccentricityMap {
    pub degrees: Plane,
    /// Ring width in degrees when quantised; each pixel then holds the
    /// inner edge of its ring.
    pub ring_width: Option<f64>,
}

impl EccentricityMap {
    /// Eccentricities for band level `k`: sample `(i, j)` takes the value of
    /// full-resolution pixel `(2^k i, 2^k j)`.
    pub fn at_level(&self, k: usize, width: usize, height: usize) -> Plane {
        let s = 1usize << k;
        let (w, h) = (self.degrees.width(), self.degrees.height());
        Plane::from_fn(width, height, |x, y| {
            self.degrees.get((x * s).min(w - 1), (y * s).min(h - 1))
        })
    }

    /// Ring index of each pixel for `ring_width` degrees.
    pub fn ring_index(&self, ring_width: f64, x: usize, y: usize) -> usize {
        (self.degrees.get(x, y) / ring_width).floor() as usize
    }

    pub fn max(&self) -> f64 {
        self.degrees.data().iter().copied().fold(0.0, f64::max)
    }
}

pub fn eccentricity_map(view: &ViewingConfig, ring_width: Option<f64>) -> Result<EccentricityMap> {
    view.validate()?;
    if let Some(w) = ring_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidInput(format!("ring width must be positive, got {w}")));
        }
    }
    let degrees = Plane::from_fn(view.width, view.height, |x, y| {
        let e = view.eccentricity((x as f64, y as f64));
        match ring_width {
            Some(w) => (e / w).floor() * w,
            None => e,
        }
    });
    Ok(EccentricityMap { degrees, ring_width })
}
