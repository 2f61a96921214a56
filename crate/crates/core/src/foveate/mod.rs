//! Eccentricity-dependent filtering of images.
//!
//! An image is split into achromatic, red-green and yellow-violet opponent
//! planes, each plane into Laplacian bands, and every band coefficient whose
//! contrast the model predicts to be invisible at that pixel's eccentricity
//! is removed before the image is reassembled.

mod color;
mod eccentricity;
pub mod io;
mod plane;
pub mod pyramid;
pub mod scene;
mod threshold;

use serde::Serialize;

pub use color::{
    dkl_to_linear, dkl_to_lms, dkl_to_srgb, linear_to_dkl, lms_to_dkl, srgb_decode, srgb_encode, srgb_to_dkl,
    Adaptation, ColorConfig, DklImage, EncodedImage, SRGB_TO_XYZ, XYZ_TO_LMS_2006,
};
pub use eccentricity::{eccentricity_map, EccentricityMap, ViewingConfig};
pub use plane::Plane;
pub use pyramid::{build_pyramid, LaplacianPyramid};
pub use threshold::{
    coefficient_gain, threshold_bands, ChannelStats, DklPyramid, FilterMode, FilterStats, ThresholdOptions,
};

use crate::csf::{ColorChannel, ModelParamSet};
use crate::error::Result;

pub const STATS_SCHEMA: u32 = 1;
/// Out-of-gamut pixel fraction above which a warning is logged.
pub const GAMUT_WARNING_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct FoveateOptions {
    /// Band count; by default the deepest pyramid whose residual is at
    /// least 8 pixels on its short side.
    pub levels: Option<usize>,
    /// Quantise eccentricity into rings of this width (degrees).
    pub rings_deg: Option<f64>,
    pub adaptation: Adaptation,
    pub threshold: ThresholdOptions,
    /// Colour chain; [`ColorConfig::standard`] for the model when `None`.
    pub color: Option<ColorConfig>,
}

impl Default for FoveateOptions {
    fn default() -> Self {
        FoveateOptions {
            levels: None,
            rings_deg: None,
            adaptation: Adaptation::Mean,
            threshold: ThresholdOptions::default(),
            color: None,
        }
    }
}

/// Default band count for an image.
pub fn default_levels(width: usize, height: usize) -> usize {
    pyramid::max_levels(width, height).saturating_sub(3).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSummary {
    pub channel: ColorChannel,
    pub coefficients: u64,
    pub zeroed: u64,
    pub zeroed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoveateStats {
    pub schema: u32,
    pub width: usize,
    pub height: usize,
    pub image_ppd: f64,
    pub max_eccentricity_deg: f64,
    pub band_cpd: Vec<f64>,
    pub calibration: [f64; 3],
    pub channels: Vec<ChannelSummary>,
    pub out_of_gamut_fraction: f64,
    #[serde(skip)]
    pub filter: FilterStats,
}

#[derive(Debug, Clone)]
pub struct FoveateOutput {
    pub image: EncodedImage,
    pub stats: FoveateStats,
    pub original: DklPyramid,
    pub filtered: DklPyramid,
    pub eccentricity: EccentricityMap,
}

/// Full pipeline: decode, opponent planes, pyramid, threshold, collapse,
/// gamut clip and re-encode at the input bit depth.
pub fn foveate_image(
    img: &EncodedImage,
    view: &ViewingConfig,
    model: &ModelParamSet,
    opts: &FoveateOptions,
) -> Result<FoveateOutput> {
    if (view.width, view.height) != (img.width, img.height) {
        return Err(crate::Error::InvalidInput(format!(
            "viewing config is for {}x{} but the image is {}x{}",
            view.width, view.height, img.width, img.height
        )));
    }
    let color = opts.color.clone().unwrap_or_else(|| ColorConfig::standard(model));
    let levels = opts.levels.unwrap_or_else(|| default_levels(img.width, img.height));
    let dkl = srgb_to_dkl(img, opts.adaptation, &color)?;
    let original = DklPyramid::build(&dkl, levels, view.image_ppd, color.calibration)?;
    let ecc = eccentricity_map(view, opts.rings_deg)?;
    let (filtered, filter) = threshold_bands(&original, &ecc, model, &opts.threshold)?;
    let (image, oog) = dkl_to_srgb(&filtered.collapse(), &color, img.bit_depth)?;
    if oog > GAMUT_WARNING_FRACTION {
        log::warn!(
            "{:.1}% of pixels fell outside the display gamut and were clipped",
            100.0 * oog
        );
    }
    let stats = FoveateStats {
        schema: STATS_SCHEMA,
        width: img.width,
        height: img.height,
        image_ppd: view.image_ppd,
        max_eccentricity_deg: ecc.max(),
        band_cpd: original.band_cpd.clone(),
        calibration: color.calibration,
        channels: ColorChannel::ALL
            .iter()
            .map(|&c| {
                let s = filter.channel(c);
                ChannelSummary {
                    channel: c,
                    coefficients: s.coefficients,
                    zeroed: s.zeroed,
                    zeroed_fraction: s.zeroed_fraction(),
                }
            })
            .collect(),
        out_of_gamut_fraction: oog,
        filter,
    };
    Ok(FoveateOutput {
        image: image.quantized(),
        stats,
        original,
        filtered,
        eccentricity: ecc,
    })
}

/// Peak signal-to-noise ratio in dB between two images of equal size,
/// on the encoded `[0, 1]` scale.
pub fn psnr(a: &EncodedImage, b: &EncodedImage) -> f64 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    let n = (a.pixels.len() * 3) as f64;
    let mse: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_view(w: usize, h: usize, ppd: f64) -> ViewingConfig {
        ViewingConfig::from_ppd(ppd, w, h, ViewingConfig::center_gaze(w, h)).unwrap()
    }

    #[test]
    fn all_pass_is_identity() {
        let img = scene::test_scene(96, 64, 1);
        let out = foveate_image(
            &img,
            &small_view(96, 64, 40.0),
            &ModelParamSet::all_pass(),
            &Default::default(),
        )
        .unwrap();
        let max_code_diff = out
            .image
            .pixels
            .iter()
            .zip(&img.pixels)
            .flat_map(|(a, b)| (0..3).map(move |k| ((a[k] - b[k]) * 255.0).abs()))
            .fold(0.0, f64::max);
        assert!(max_code_diff <= 1.0 + 1e-9);
        assert!(psnr(&out.image, &img) > 48.0);
    }

    #[test]
    fn zero_contrast_band_stays_zero() {
        let img = EncodedImage::new(64, 64, 8, vec![[0.4, 0.5, 0.3]; 64 * 64]).unwrap();
        let out = foveate_image(
            &img,
            &small_view(64, 64, 30.0),
            &ModelParamSet::reference(),
            &Default::default(),
        )
        .unwrap();
        for p in &out.filtered.planes {
            for b in &p.bands {
                assert!(b.max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn high_contrast_grating_survives_at_fovea() {
        // achromatic grating at 2 cpd, Michelson contrast 0.9, e = 0 everywhere
        let (w, h, ppd) = (128, 128, 20.0);
        let color = ColorConfig::standard(&ModelParamSet::reference());
        let grey = EncodedImage::new(w, h, 8, vec![[0.5; 3]; w * h]).unwrap();
        let mut dkl = srgb_to_dkl(&grey, Adaptation::Mean, &color).unwrap();
        let l0 = dkl.background_luminance();
        dkl.planes[0] = Plane::from_fn(w, h, |x, _| {
            0.9 * l0 * (2.0 * std::f64::consts::PI * 2.0 * x as f64 / ppd).sin()
        });
        let pyr = DklPyramid::build(&dkl, 4, ppd, color.calibration).unwrap();
        let ecc = EccentricityMap {
            degrees: Plane::new(w, h),
            ring_width: None,
        };
        let m = ModelParamSet::reference();
        let (f, _) = threshold_bands(&pyr, &ecc, &m, &ThresholdOptions::default()).unwrap();
        let p = m.params(ColorChannel::Achromatic);
        let mut checked = 0;
        for (k, band) in pyr.planes[0].bands.iter().enumerate() {
            let rho = pyr.band_cpd[k];
            assert!(rho < 10.0);
            let threshold = 10f64.powf(-p.sensitivity(0.0, rho).unwrap());
            for i in 0..band.data().len() {
                let c = band.data()[i].abs() * color.calibration[0] / pyr.luminance[k].data()[i].max(0.01 * l0);
                if c >= threshold {
                    assert_eq!(f.planes[0].bands[k].data()[i], band.data()[i]);
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn chromatic_bands_beyond_cutoff_are_removed_at_20_deg() {
        let img = scene::test_scene(128, 128, 5);
        let color = ColorConfig::standard(&ModelParamSet::reference());
        let dkl = srgb_to_dkl(&img, Adaptation::Mean, &color).unwrap();
        // band 1 at 90 ppd sits near 10 cpd
        let pyr = DklPyramid::build(&dkl, 3, 90.0, color.calibration).unwrap();
        assert!((pyr.band_cpd[1] - 10.0).abs() < 1.0, "{}", pyr.band_cpd[1]);
        let ecc = EccentricityMap {
            degrees: Plane::filled(128, 128, 20.0),
            ring_width: None,
        };
        let (f, _) = threshold_bands(&pyr, &ecc, &ModelParamSet::reference(), &ThresholdOptions::default()).unwrap();
        for c in [ColorChannel::RedGreen, ColorChannel::YellowViolet] {
            let cutoff = ModelParamSet::reference()
                .params(c)
                .threshold_resolution_at_contrast(20.0, 1.0)
                .unwrap()
                / 2.0;
            assert!(cutoff < 10.0);
            assert!(f.planes[c.index()].bands[1].max_abs() == 0.0);
        }
    }

    #[test]
    fn raising_sensitivity_never_removes_survivors() {
        let img = scene::test_scene(96, 96, 8);
        let view = small_view(96, 96, 15.0);
        let m = ModelParamSet::reference();
        let a = foveate_image(&img, &view, &m, &Default::default()).unwrap();
        let b = foveate_image(&img, &view, &m.scale_baseline(2.0), &Default::default()).unwrap();
        for c in 0..3 {
            for (ba, bb) in a.filtered.planes[c].bands.iter().zip(&b.filtered.planes[c].bands) {
                for (x, y) in ba.data().iter().zip(bb.data()) {
                    if *x != 0.0 {
                        assert_ne!(*y, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn soft_mode_attenuates_between() {
        let img = scene::test_scene(64, 64, 9);
        let view = small_view(64, 64, 20.0);
        let m = ModelParamSet::reference();
        let opts = FoveateOptions {
            threshold: ThresholdOptions {
                mode: FilterMode::Soft,
                ..Default::default()
            },
            ..Default::default()
        };
        let soft = foveate_image(&img, &view, &m, &opts).unwrap();
        for (o, s) in soft.original.planes[0].bands[0]
            .data()
            .iter()
            .zip(soft.filtered.planes[0].bands[0].data())
        {
            assert!(s.abs() <= o.abs() + 1e-15);
            assert!(s.is_finite());
        }
    }

    #[test]
    fn deterministic_output() {
        let img = scene::test_scene(80, 60, 4);
        let view = small_view(80, 60, 25.0);
        let m = ModelParamSet::reference();
        let a = foveate_image(&img, &view, &m, &Default::default()).unwrap();
        let b = foveate_image(&img, &view, &m, &Default::default()).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn mismatched_view_is_rejected() {
        let img = scene::test_scene(32, 32, 1);
        let view = small_view(40, 32, 25.0);
        assert!(foveate_image(&img, &view, &ModelParamSet::reference(), &Default::default()).is_err());
    }
}
