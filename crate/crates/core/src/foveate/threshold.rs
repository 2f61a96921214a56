use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pyramid::{band_peak_frequency, build_pyramid, gaussian_pyramid, LaplacianPyramid};
use super::{DklImage, EccentricityMap, Plane};
use crate::csf::{ChannelParams, ColorChannel, ModelParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Zero sub-threshold coefficients.
    #[default]
    Hard,
    /// Attenuate by a smooth function of contrast over threshold.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub mode: FilterMode,
    /// Luminance floor for contrast normalisation, as a fraction of the
    /// adaptation luminance.
    pub luminance_floor: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            mode: FilterMode::Hard,
            luminance_floor: 0.01,
        }
    }
}

/// Opponent planes decomposed into Laplacian bands, with the low-pass
/// luminance used to turn coefficients into contrast.
#[derive(Debug, Clone, PartialEq)]
pub struct DklPyramid {
    pub planes: [LaplacianPyramid; 3],
    /// Gaussian levels of absolute L+M, one per band.
    pub luminance: Vec<Plane>,
    /// Nominal frequency of each band in cpd.
    pub band_cpd: Vec<f64>,
    pub image_ppd: f64,
    pub adaptation_lms: [f64; 3],
    /// Plane-to-contrast factors per channel.
    pub calibration: [f64; 3],
}

impl DklPyramid {
    pub fn build(dkl: &DklImage, levels: usize, image_ppd: f64, calibration: [f64; 3]) -> Result<Self> {
        if !(image_ppd > 0.0 && image_ppd.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "image ppd must be positive, got {image_ppd}"
            )));
        }
        let planes: Vec<LaplacianPyramid> = dkl
            .planes
            .par_iter()
            .map(|p| build_pyramid(p, levels))
            .collect::<Result<_>>()?;
        let mut luminance = gaussian_pyramid(&dkl.luminance(), levels)?;
        luminance.truncate(levels);
        let band_cpd = (0..levels).map(|k| image_ppd * band_peak_frequency(k)).collect();
        let planes: [LaplacianPyramid; 3] = planes.try_into().expect("three planes");
        Ok(DklPyramid {
            planes,
            luminance,
            band_cpd,
            image_ppd,
            adaptation_lms: dkl.adaptation_lms,
            calibration,
        })
    }

    pub fn levels(&self) -> usize {
        self.band_cpd.len()
    }

    pub fn collapse(&self) -> DklImage {
        let planes: Vec<Plane> = self.planes.par_iter().map(LaplacianPyramid::collapse).collect();
        let planes: [Plane; 3] = planes.try_into().expect("three planes");
        DklImage {
            width: planes[0].width(),
            height: planes[0].height(),
            planes,
            adaptation_lms: self.adaptation_lms,
        }
    }
}

/// Counts of thresholded coefficients for one channel, overall and in
/// 1-degree eccentricity bins.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelStats {
    pub channel: Option<ColorChannel>,
    pub coefficients: u64,
    pub zeroed: u64,
    /// `(coefficients, zeroed)` for eccentricity in `[i, i+1)` degrees.
    pub per_degree: Vec<(u64, u64)>,
}

impl ChannelStats {
    pub fn zeroed_fraction(&self) -> f64 {
        if self.coefficients == 0 {
            0.0
        } else {
            self.zeroed as f64 / self.coefficients as f64
        }
    }

    /// Zeroed fraction over eccentricities in `[lo, hi)` degrees.
    pub fn zeroed_fraction_between(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut n, mut z) = (0u64, 0u64);
        for (i, &(c, zz)) in self.per_degree.iter().enumerate() {
            let e = i as f64;
            if e >= lo && e < hi {
                n += c;
                z += zz;
            }
        }
        (n > 0).then(|| z as f64 / n as f64)
    }

    fn record(&mut self, ecc: f64, zeroed: bool) {
        let bin = ecc.max(0.0).floor() as usize;
        if self.per_degree.len() <= bin {
            self.per_degree.resize(bin + 1, (0, 0));
        }
        self.coefficients += 1;
        self.per_degree[bin].0 += 1;
        if zeroed {
            self.zeroed += 1;
            self.per_degree[bin].1 += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterStats {
    pub channels: [ChannelStats; 3],
}

impl FilterStats {
    pub fn channel(&self, c: ColorChannel) -> &ChannelStats {
        &self.channels[c.index()]
    }
}

/// Highest frequency (cpd) visible at full contrast; infinite for an
/// all-pass model.
#[inline]
fn cutoff_cpd(p: &ChannelParams, ecc: f64) -> f64 {
    p.threshold_cpd_for_log_sensitivity(ecc, 0.0)
}

/// Gain applied to a band coefficient of the given contrast at eccentricity
/// `ecc` and band frequency `rho_cpd`: 0 or 1 in hard mode.
pub fn coefficient_gain(params: &ChannelParams, ecc: f64, rho_cpd: f64, contrast: f64, mode: FilterMode) -> f64 {
    if rho_cpd > cutoff_cpd(params, ecc) {
        return 0.0;
    }
    // contrast * S compared in log space, so an all-pass model (infinite
    // baseline) never thresholds
    let log_ratio = contrast.log10() + params.sensitivity_unchecked(ecc, rho_cpd);
    match mode {
        FilterMode::Hard => {
            if log_ratio < 0.0 {
                0.0
            } else {
                1.0
            }
        }
        FilterMode::Soft => {
            let r4 = 10f64.powf(4.0 * log_ratio);
            if r4.is_infinite() {
                1.0
            } else {
                r4 / (1.0 + r4)
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn filter_plane(
    pyr: &LaplacianPyramid,
    luminance: &[Plane],
    band_cpd: &[f64],
    ecc: &EccentricityMap,
    params: &ChannelParams,
    calibration: f64,
    floor: f64,
    mode: FilterMode,
    channel: ColorChannel,
) -> (LaplacianPyramid, ChannelStats) {
    let mut stats = ChannelStats {
        channel: Some(channel),
        ..Default::default()
    };
    let mut out = pyr.clone();
    for (k, band) in out.bands.iter_mut().enumerate() {
        let (w, h) = (band.width(), band.height());
        let e_level = ecc.at_level(k, w, h);
        let lum = &luminance[k];
        let rho = band_cpd[k];
        for i in 0..w * h {
            let e = e_level.data()[i];
            let coef = band.data()[i];
            let gain = if coef == 0.0 {
                0.0
            } else {
                coefficient_gain(
                    params,
                    e,
                    rho,
                    coef.abs() * calibration / lum.data()[i].max(floor),
                    mode,
                )
            };
            stats.record(e, gain == 0.0);
            band.data_mut()[i] = coef * gain;
        }
    }
    (out, stats)
}

/// Removes band contrast the model predicts to be invisible at each
/// pixel's eccentricity. A coefficient is dropped when its contrast
/// (magnitude over local low-pass luminance, calibrated per channel) is
/// below the inverse sensitivity at the band frequency, or when the band
/// lies beyond the full-contrast resolution limit.
pub fn threshold_bands(
    pyr: &DklPyramid,
    ecc: &EccentricityMap,
    model: &ModelParamSet,
    opts: &ThresholdOptions,
) -> Result<(DklPyramid, FilterStats)> {
    let (w, h) = (pyr.planes[0].bands[0].width(), pyr.planes[0].bands[0].height());
    if (ecc.degrees.width(), ecc.degrees.height()) != (w, h) {
        return Err(Error::InvalidInput(format!(
            "eccentricity map {}x{} does not match the {w}x{h} pyramid",
            ecc.degrees.width(),
            ecc.degrees.height()
        )));
    }
    if !(opts.luminance_floor > 0.0) {
        return Err(Error::InvalidInput("luminance floor must be positive".into()));
    }
    let floor = opts.luminance_floor * (pyr.adaptation_lms[0] + pyr.adaptation_lms[1]);
    let results: Vec<(LaplacianPyramid, ChannelStats)> = ColorChannel::ALL
        .par_iter()
        .map(|&c| {
            filter_plane(
                &pyr.planes[c.index()],
                &pyr.luminance,
                &pyr.band_cpd,
                ecc,
                &model.params(c),
                pyr.calibration[c.index()],
                floor,
                opts.mode,
                c,
            )
        })
        .collect();
    let mut planes = Vec::with_capacity(3);
    let mut stats = FilterStats::default();
    for (i, (p, s)) in results.into_iter().enumerate() {
        planes.push(p);
        stats.channels[i] = s;
    }
    Ok((
        DklPyramid {
            planes: planes.try_into().expect("three planes"),
            luminance: pyr.luminance.clone(),
            band_cpd: pyr.band_cpd.clone(),
            image_ppd: pyr.image_ppd,
            adaptation_lms: pyr.adaptation_lms,
            calibration: pyr.calibration,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_contrast_low_frequency_kept_at_fovea() {
        let p = ModelParamSet::reference().params(ColorChannel::Achromatic);
        for rho in [0.5, 1.0, 2.0, 5.0, 9.99] {
            assert_eq!(coefficient_gain(&p, 0.0, rho, 0.9, FilterMode::Hard), 1.0);
        }
    }

    #[test]
    fn chromatic_10_cpd_removed_at_20_deg() {
        for c in [ColorChannel::RedGreen, ColorChannel::YellowViolet] {
            let p = ModelParamSet::reference().params(c);
            for contrast in [1e-3, 0.1, 0.5, 1.0, 10.0] {
                assert_eq!(coefficient_gain(&p, 20.0, 10.0, contrast, FilterMode::Hard), 0.0);
                assert_eq!(coefficient_gain(&p, 20.0, 10.0, contrast, FilterMode::Soft), 0.0);
            }
        }
    }

    #[test]
    fn threshold_is_inverse_sensitivity() {
        let p = ModelParamSet::reference().params(ColorChannel::Achromatic);
        let s = 10f64.powf(p.sensitivity(5.0, 3.0).unwrap());
        assert_eq!(coefficient_gain(&p, 5.0, 3.0, 1.0001 / s, FilterMode::Hard), 1.0);
        assert_eq!(coefficient_gain(&p, 5.0, 3.0, 0.9999 / s, FilterMode::Hard), 0.0);
        let soft = coefficient_gain(&p, 5.0, 3.0, 1.0 / s, FilterMode::Soft);
        assert!((soft - 0.5).abs() < 1e-9);
    }

    #[test]
    fn all_pass_keeps_everything() {
        let p = ChannelParams::all_pass();
        for mode in [FilterMode::Hard, FilterMode::Soft] {
            assert_eq!(coefficient_gain(&p, 40.0, 100.0, 1e-9, mode), 1.0);
        }
    }
}
