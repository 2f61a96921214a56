use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Plane;
use crate::csf::{ColorChannel, ModelParamSet};
use crate::error::{Error, Result};

/// Linear sRGB (D65) to CIE 1931 XYZ, white at Y = 1.
#[allow(clippy::excessive_precision)]
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4123907992659595, 0.3575843393838780, 0.1804807884018343],
    [0.2126390058715104, 0.7151686787677559, 0.0721923153607337],
    [0.0193308187155918, 0.1191947797946259, 0.9505321522496606],
];

/// XYZ to LMS cone responses (CIE 2006 2-degree fundamentals).
pub const XYZ_TO_LMS_2006: [[f64; 3]; 3] = [
    [0.187596268556126, 0.585168649077728, -0.026384263306304],
    [-0.133397430663221, 0.405505777260049, 0.034502127690364],
    [0.000244379021663, -0.000542995890619, 0.019406849066323],
];

pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn srgb_encode(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// An encoded RGB image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub width: usize,
    pub height: usize,
    /// 8 or 16.
    pub bit_depth: u8,
    pub pixels: Vec<[f64; 3]>,
}

impl EncodedImage {
    pub fn new(width: usize, height: usize, bit_depth: u8, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::InvalidInput(format!(
                "bit depth must be 8 or 16, got {bit_depth}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput("pixel count does not match dimensions".into()));
        }
        Ok(EncodedImage {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    pub fn max_code(&self) -> f64 {
        if self.bit_depth == 16 {
            65535.0
        } else {
            255.0
        }
    }

    /// Values rounded to the integer codes of the bit depth.
    pub fn quantized(&self) -> Self {
        let m = self.max_code();
        let pixels = self
            .pixels
            .iter()
            .map(|p| p.map(|v| (v.clamp(0.0, 1.0) * m).round() / m))
            .collect();
        EncodedImage { pixels, ..*self }
    }
}

/// Background the opponent planes are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Mean linear colour of the image.
    #[default]
    Mean,
    /// Explicit XYZ tristimulus (display white has Y = 1).
    Xyz([f64; 3]),
}

/// The RGB to cone-response chain plus the per-channel factors that turn
/// plane values into the model's contrast units.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorConfig {
    rgb_to_lms: Matrix3<f64>,
    lms_to_rgb: Matrix3<f64>,
    xyz_to_lms: Matrix3<f64>,
    lms_to_xyz: Matrix3<f64>,
    pub calibration: [f64; 3],
}

fn matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

impl ColorConfig {
    pub fn new(rgb_to_xyz: [[f64; 3]; 3], xyz_to_lms: [[f64; 3]; 3], calibration: [f64; 3]) -> Result<Self> {
        let xyz_to_lms = matrix(&xyz_to_lms);
        let rgb_to_lms = xyz_to_lms * matrix(&rgb_to_xyz);
        let lms_to_rgb = rgb_to_lms
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("colour matrix chain is singular".into()))?;
        let lms_to_xyz = xyz_to_lms
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("cone matrix is singular".into()))?;
        if calibration.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput("calibration factors must be positive".into()));
        }
        Ok(ColorConfig {
            rgb_to_lms,
            lms_to_rgb,
            xyz_to_lms,
            lms_to_xyz,
            calibration,
        })
    }

    /// sRGB primaries, CIE 2006 cones, and calibration derived from the
    /// stimulus poles of `model` (falling back to the reference poles for
    /// channels that carry none).
    pub fn standard(model: &ModelParamSet) -> Self {
        let mut cfg = ColorConfig::new(SRGB_TO_XYZ, XYZ_TO_LMS_2006, [1.0; 3]).expect("standard matrices invert");
        let reference = ModelParamSet::reference();
        for c in ColorChannel::ALL {
            cfg.calibration[c.index()] = cfg
                .calibration_for(model, c)
                .or_else(|| cfg.calibration_for(&reference, c))
                .unwrap_or(1.0);
        }
        cfg
    }

    /// Factor `k` such that the channel's stimulus pole pair, measured as
    /// half its plane difference over the background L+M, has the listed
    /// cone contrast.
    pub fn calibration_for(&self, model: &ModelParamSet, channel: ColorChannel) -> Option<f64> {
        let rec = model.record(channel);
        let cc = rec.cone_contrast?;
        let [a, b] = rec.poles.as_slice() else {
            return None;
        };
        let la = self.xyz_to_lms(a.xyz());
        let lb = self.xyz_to_lms(b.xyz());
        let mid = [0.5 * (la[0] + lb[0]), 0.5 * (la[1] + lb[1]), 0.5 * (la[2] + lb[2])];
        let da = lms_to_dkl(la, mid)[channel.index()];
        let db = lms_to_dkl(lb, mid)[channel.index()];
        let half = 0.5 * (da - db).abs();
        let k = cc * (mid[0] + mid[1]) / half;
        (k.is_finite() && k > 0.0).then_some(k)
    }

    pub fn xyz_to_lms(&self, xyz: [f64; 3]) -> [f64; 3] {
        (self.xyz_to_lms * Vector3::from(xyz)).into()
    }

    pub fn lms_to_xyz(&self, lms: [f64; 3]) -> [f64; 3] {
        (self.lms_to_xyz * Vector3::from(lms)).into()
    }

    pub fn linear_rgb_to_lms(&self, rgb: [f64; 3]) -> [f64; 3] {
        (self.rgb_to_lms * Vector3::from(rgb)).into()
    }

    pub fn lms_to_linear_rgb(&self, lms: [f64; 3]) -> [f64; 3] {
        (self.lms_to_rgb * Vector3::from(lms)).into()
    }
}

/// Opponent coordinates of `lms` relative to the background `adapt`:
/// achromatic L+M, red-green L-M balanced to null at the background ratio,
/// and yellow-violet S-(L+M).
#[inline]
pub fn lms_to_dkl(lms: [f64; 3], adapt: [f64; 3]) -> [f64; 3] {
    let (dl, dm, ds) = (lms[0] - adapt[0], lms[1] - adapt[1], lms[2] - adapt[2]);
    let r = adapt[0] / adapt[1];
    let s = adapt[2] / (adapt[0] + adapt[1]);
    [dl + dm, dl - r * dm, ds - s * (dl + dm)]
}

#[inline]
pub fn dkl_to_lms(dkl: [f64; 3], adapt: [f64; 3]) -> [f64; 3] {
    let [ach, rg, yv] = dkl;
    let r = adapt[0] / adapt[1];
    let s = adapt[2] / (adapt[0] + adapt[1]);
    let dm = (ach - rg) / (1.0 + r);
    let dl = ach - dm;
    let ds = yv + s * ach;
    [adapt[0] + dl, adapt[1] + dm, adapt[2] + ds]
}

/// Image as three opponent planes relative to an adaptation point.
#[derive(Debug, Clone, PartialEq)]
pub struct DklImage {
    pub width: usize,
    pub height: usize,
    /// Achromatic, red-green, yellow-violet.
    pub planes: [Plane; 3],
    pub adaptation_lms: [f64; 3],
}

impl DklImage {
    /// L+M of the adaptation point.
    pub fn background_luminance(&self) -> f64 {
        self.adaptation_lms[0] + self.adaptation_lms[1]
    }

    /// Absolute L+M per pixel.
    pub fn luminance(&self) -> Plane {
        let b = self.background_luminance();
        let mut p = self.planes[0].clone();
        p.data_mut().iter_mut().for_each(|v| *v += b);
        p
    }

    pub fn plane(&self, c: ColorChannel) -> &Plane {
        &self.planes[c.index()]
    }
}

fn adaptation_lms(linear: &[[f64; 3]], adaptation: Adaptation, cfg: &ColorConfig) -> Result<[f64; 3]> {
    let lms = match adaptation {
        Adaptation::Xyz(xyz) => {
            if !(xyz[1] > 0.0) {
                return Err(Error::InvalidInput("adaptation luminance must be positive".into()));
            }
            cfg.xyz_to_lms(xyz)
        }
        Adaptation::Mean => {
            let n = linear.len().max(1) as f64;
            let mut sum = [0.0; 3];
            for p in linear {
                for (s, v) in sum.iter_mut().zip(p) {
                    *s += v;
                }
            }
            cfg.linear_rgb_to_lms(sum.map(|s| s / n))
        }
    };
    if !(lms[0] + lms[1] > 0.0 && lms[1] > 0.0 && lms.iter().all(|v| v.is_finite())) {
        return Err(Error::InvalidInput(
            "adaptation point has zero luminance; opponent axes are undefined".into(),
        ));
    }
    Ok(lms)
}

/// Linear-light RGB to opponent planes.
pub fn linear_to_dkl(
    width: usize,
    height: usize,
    linear: &[[f64; 3]],
    adaptation: Adaptation,
    cfg: &ColorConfig,
) -> Result<DklImage> {
    let adapt = adaptation_lms(linear, adaptation, cfg)?;
    let mut planes = [
        Plane::new(width, height),
        Plane::new(width, height),
        Plane::new(width, height),
    ];
    for (i, p) in linear.iter().enumerate() {
        let d = lms_to_dkl(cfg.linear_rgb_to_lms(*p), adapt);
        for c in 0..3 {
            planes[c].data_mut()[i] = d[c];
        }
    }
    Ok(DklImage {
        width,
        height,
        planes,
        adaptation_lms: adapt,
    })
}

pub fn srgb_to_dkl(img: &EncodedImage, adaptation: Adaptation, cfg: &ColorConfig) -> Result<DklImage> {
    let linear: Vec<[f64; 3]> = img.pixels.iter().map(|p| p.map(srgb_decode)).collect();
    linear_to_dkl(img.width, img.height, &linear, adaptation, cfg)
}

/// Opponent planes back to unclipped linear-light RGB.
pub fn dkl_to_linear(dkl: &DklImage, cfg: &ColorConfig) -> Vec<[f64; 3]> {
    let n = dkl.width * dkl.height;
    (0..n)
        .map(|i| {
            let d = [
                dkl.planes[0].data()[i],
                dkl.planes[1].data()[i],
                dkl.planes[2].data()[i],
            ];
            cfg.lms_to_linear_rgb(dkl_to_lms(d, dkl.adaptation_lms))
        })
        .collect()
}

/// Opponent planes to an encoded image, clipping each channel to the gamut.
/// Also returns the fraction of pixels that needed clipping.
pub fn dkl_to_srgb(dkl: &DklImage, cfg: &ColorConfig, bit_depth: u8) -> Result<(EncodedImage, f64)> {
    let linear = dkl_to_linear(dkl, cfg);
    let tol = 1e-9;
    let mut outside = 0usize;
    let pixels: Vec<[f64; 3]> = linear
        .iter()
        .map(|p| {
            if p.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
                outside += 1;
            }
            p.map(|v| srgb_encode(v.clamp(0.0, 1.0)))
        })
        .collect();
    let frac = outside as f64 / linear.len().max(1) as f64;
    Ok((EncodedImage::new(dkl.width, dkl.height, bit_depth, pixels)?, frac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csf::Pole;

    fn cfg() -> ColorConfig {
        ColorConfig::standard(&ModelParamSet::reference())
    }

    #[test]
    fn transfer_function_round_trip() {
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            assert!((srgb_encode(srgb_decode(v)) - v).abs() < 1e-12);
        }
        assert!((srgb_decode(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn white_is_d65() {
        let xyz: Vector3<f64> = matrix(&SRGB_TO_XYZ) * Vector3::new(1.0, 1.0, 1.0);
        assert!((xyz[0] / (xyz[0] + xyz[1] + xyz[2]) - 0.3127).abs() < 1e-4);
        assert!((xyz[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_gray_gives_zero_planes() {
        let img = EncodedImage::new(8, 6, 8, vec![[0.5; 3]; 48]).unwrap();
        let d = srgb_to_dkl(&img, Adaptation::Mean, &cfg()).unwrap();
        for p in &d.planes {
            assert!(p.max_abs() < 1e-12);
        }
    }

    #[test]
    fn dkl_axes_invert() {
        let adapt = [0.6, 0.35, 0.02];
        for lms in [[0.1, 0.2, 0.3], [0.61, 0.34, 0.021], [1.0, 0.0, 0.5]] {
            let back = dkl_to_lms(lms_to_dkl(lms, adapt), adapt);
            for k in 0..3 {
                assert!((back[k] - lms[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn red_green_pair_is_opponent() {
        let c = cfg();
        let red = Pole {
            name: "red".into(),
            luminance: 100.0,
            x: 0.4022,
            y: 0.2834,
        };
        let green = Pole {
            name: "green".into(),
            luminance: 100.0,
            x: 0.2410,
            y: 0.3710,
        };
        let (lr, lg) = (c.xyz_to_lms(red.xyz()), c.xyz_to_lms(green.xyz()));
        let mid = [0.5 * (lr[0] + lg[0]), 0.5 * (lr[1] + lg[1]), 0.5 * (lr[2] + lg[2])];
        let (dr, dg) = (lms_to_dkl(lr, mid), lms_to_dkl(lg, mid));
        assert!(((dr[1] + dg[1]) / dr[1]).abs() < 0.02);
        assert!(dr[1] * dg[1] < 0.0);
        // the pair is photometrically isoluminant; cone L+M differs by ~4%
        let lum = mid[0] + mid[1];
        assert!((dr[0] - dg[0]).abs() / lum < 0.05);
    }

    #[test]
    fn calibration_reproduces_cone_contrasts() {
        let c = cfg();
        // achromatic poles share a chromaticity, so Michelson contrast already
        // equals the listed cone contrast
        assert!((c.calibration[0] - 1.0).abs() < 1e-3, "{}", c.calibration[0]);
        assert!(c.calibration[1] > 0.0 && c.calibration[2] > 0.0);
    }

    #[test]
    fn zero_luminance_adaptation_is_an_error() {
        let black = EncodedImage::new(4, 4, 8, vec![[0.0; 3]; 16]).unwrap();
        assert!(srgb_to_dkl(&black, Adaptation::Mean, &cfg()).is_err());
        let img = EncodedImage::new(4, 4, 8, vec![[0.3; 3]; 16]).unwrap();
        assert!(srgb_to_dkl(&img, Adaptation::Xyz([0.0, 0.0, 0.0]), &cfg()).is_err());
    }

    #[test]
    fn round_trip_in_gamut() {
        let c = cfg();
        let pixels: Vec<[f64; 3]> = (0..200)
            .map(|i| {
                let t = i as f64;
                [
                    (t * 0.37).sin() * 0.5 + 0.5,
                    (t * 0.11).cos() * 0.45 + 0.5,
                    (t * 0.07).sin() * 0.3 + 0.4,
                ]
            })
            .collect();
        let img = EncodedImage::new(20, 10, 16, pixels).unwrap();
        let d = srgb_to_dkl(&img, Adaptation::Mean, &c).unwrap();
        let (back, oog) = dkl_to_srgb(&d, &c, 16).unwrap();
        assert_eq!(oog, 0.0);
        let d2 = srgb_to_dkl(&back, Adaptation::Xyz(c.lms_to_xyz(d.adaptation_lms)), &c).unwrap();
        for k in 0..3 {
            assert!(d2.planes[k].max_abs_diff(&d.planes[k]) < 1e-6);
        }
        for (a, b) in back.pixels.iter().zip(&img.pixels) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-9);
            }
        }
    }
}
