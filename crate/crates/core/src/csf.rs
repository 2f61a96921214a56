//! Resolution-limit model per colour channel.
//!
//! Log sensitivity falls linearly with spatial frequency, with a slope that
//! steepens linearly with eccentricity:
//!
//! ```text
//! log10 S(e, rho) = log10 S0 + k_rho * (1 + k_ecc * e) * rho
//! ```
//!
//! Solving for the frequency at which the sensitivity equals that of a fixed
//! stimulus gives the threshold frequency. Logarithms are base 10. Internal
//! math is in cpd; the factor of two to ppd is applied only where a function
//! returns ppd.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const REFERENCE_MODEL_JSON: &str = include_str!("../data/reference_model.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorChannel {
    Achromatic,
    RedGreen,
    YellowViolet,
}

impl ColorChannel {
    pub const ALL: [ColorChannel; 3] = [
        ColorChannel::Achromatic,
        ColorChannel::RedGreen,
        ColorChannel::YellowViolet,
    ];

    pub fn index(self) -> usize {
        match self {
            ColorChannel::Achromatic => 0,
            ColorChannel::RedGreen => 1,
            ColorChannel::YellowViolet => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorChannel::Achromatic => "achromatic",
            ColorChannel::RedGreen => "red_green",
            ColorChannel::YellowViolet => "yellow_violet",
        }
    }
}

impl fmt::Display for ColorChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColorChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "achromatic" | "ach" | "luminance" => Ok(ColorChannel::Achromatic),
            "red_green" | "rg" | "redgreen" => Ok(ColorChannel::RedGreen),
            "yellow_violet" | "yv" | "yellowviolet" => Ok(ColorChannel::YellowViolet),
            other => Err(Error::InvalidInput(format!("unknown colour channel '{other}'"))),
        }
    }
}

/// Fitted coefficients for one channel plus the sensitivity of the stimulus
/// the thresholds were measured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub log_s0: f64,
    pub k_rho: f64,
    pub k_ecc: f64,
    pub stimulus_sensitivity: f64,
}

impl ChannelParams {
    pub fn new(log_s0: f64, k_rho: f64, k_ecc: f64, stimulus_sensitivity: f64) -> Result<Self> {
        let p = ChannelParams {
            log_s0,
            k_rho,
            k_ecc,
            stimulus_sensitivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_rho < 0.0 && self.k_rho.is_finite()) {
            return Err(domain(format!("k_rho must be negative, got {}", self.k_rho)));
        }
        if !(self.k_ecc > 0.0 && self.k_ecc.is_finite()) {
            return Err(domain(format!("k_ecc must be positive, got {}", self.k_ecc)));
        }
        if !(self.log_s0 > 0.0) {
            return Err(domain(format!("log_s0 must be positive, got {}", self.log_s0)));
        }
        if !(self.stimulus_sensitivity > 0.0 && self.stimulus_sensitivity.is_finite()) {
            return Err(domain("stimulus sensitivity must be positive"));
        }
        Ok(())
    }

    /// Parameters that never produce a finite threshold: every contrast is
    /// visible at every frequency and eccentricity.
    pub fn all_pass() -> Self {
        ChannelParams {
            log_s0: f64::INFINITY,
            k_rho: -1.0,
            k_ecc: 1.0,
            stimulus_sensitivity: 1.0,
        }
    }

    /// log10 sensitivity at eccentricity `ecc_deg` and frequency `rho_cpd`.
    pub fn sensitivity(&self, ecc_deg: f64, rho_cpd: f64) -> Result<f64> {
        check_ecc(ecc_deg)?;
        if !(rho_cpd >= 0.0) {
            return Err(domain(format!("spatial frequency must be >= 0, got {rho_cpd}")));
        }
        Ok(self.sensitivity_unchecked(ecc_deg, rho_cpd))
    }

    #[inline]
    pub(crate) fn sensitivity_unchecked(&self, ecc_deg: f64, rho_cpd: f64) -> f64 {
        if rho_cpd == 0.0 {
            return self.log_s0;
        }
        self.log_s0 + self.k_rho * (1.0 + self.k_ecc * ecc_deg) * rho_cpd
    }

    /// Frequency (cpd) at which log sensitivity drops to `log_s`.
    #[inline]
    pub(crate) fn threshold_cpd_for_log_sensitivity(&self, ecc_deg: f64, log_s: f64) -> f64 {
        (log_s - self.log_s0) / (self.k_rho * (1.0 + self.k_ecc * ecc_deg))
    }

    /// Threshold spatial frequency in cpd for the measured stimulus.
    pub fn threshold_cpd(&self, ecc_deg: f64) -> Result<f64> {
        check_ecc(ecc_deg)?;
        let log_s = self.stimulus_sensitivity.log10();
        if log_s >= self.log_s0 {
            return Err(Error::UnboundedThreshold {
                stimulus: self.stimulus_sensitivity,
                baseline: 10f64.powf(self.log_s0),
            });
        }
        Ok(self.threshold_cpd_for_log_sensitivity(ecc_deg, log_s))
    }

    /// Threshold resolution in ppd for the measured stimulus.
    pub fn threshold_resolution(&self, ecc_deg: f64) -> Result<f64> {
        Ok(2.0 * self.threshold_cpd(ecc_deg)?)
    }

    /// Threshold resolution in ppd for a stimulus of the given cone contrast.
    /// A contrast of 1 gives the limit of an ideal display.
    pub fn threshold_resolution_at_contrast(&self, ecc_deg: f64, contrast: f64) -> Result<f64> {
        check_ecc(ecc_deg)?;
        if !(contrast > 0.0 && contrast <= 1.0) {
            return Err(domain(format!("contrast must be in (0, 1], got {contrast}")));
        }
        let log_s = -contrast.log10();
        if log_s >= self.log_s0 {
            return Err(Error::UnboundedThreshold {
                stimulus: 1.0 / contrast,
                baseline: 10f64.powf(self.log_s0),
            });
        }
        Ok(2.0 * self.threshold_cpd_for_log_sensitivity(ecc_deg, log_s))
    }
}

fn check_ecc(ecc_deg: f64) -> Result<()> {
    if !(ecc_deg >= 0.0) || !ecc_deg.is_finite() {
        return Err(domain(format!("eccentricity must be finite and >= 0, got {ecc_deg}")));
    }
    Ok(())
}

/// CIE xyY chromaticity and luminance of one pole of a stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub name: String,
    pub luminance: f64,
    pub x: f64,
    pub y: f64,
}

impl Pole {
    /// CIE XYZ in the luminance units of the pole.
    pub fn xyz(&self) -> [f64; 3] {
        let y_lum = self.luminance;
        [self.x / self.y * y_lum, y_lum, (1.0 - self.x - self.y) / self.y * y_lum]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub log_s0: f64,
    pub k_rho: f64,
    pub k_ecc: f64,
    pub stimulus_sensitivity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_contrast: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub poles: Vec<Pole>,
}

impl ChannelRecord {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            log_s0: self.log_s0,
            k_rho: self.k_rho,
            k_ecc: self.k_ecc,
            stimulus_sensitivity: self.stimulus_sensitivity,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    schema: u32,
    #[serde(default)]
    provenance: String,
    #[serde(default)]
    source: String,
    channels: BTreeMap<ColorChannel, ChannelRecord>,
}

/// A complete set of per-channel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParamSet {
    pub provenance: String,
    pub source: String,
    channels: [ChannelRecord; 3],
}

impl ModelParamSet {
    /// The parameter set shipped with the crate.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_MODEL_JSON).expect("embedded reference model is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema != 1 {
            return Err(Error::Data(format!("unsupported model schema {}", file.schema)));
        }
        let get = |c: ColorChannel| {
            file.channels
                .get(&c)
                .cloned()
                .ok_or_else(|| Error::Data(format!("model file is missing channel {c}")))
        };
        let channels = [
            get(ColorChannel::Achromatic)?,
            get(ColorChannel::RedGreen)?,
            get(ColorChannel::YellowViolet)?,
        ];
        for (c, rec) in ColorChannel::ALL.iter().zip(&channels) {
            rec.params()
                .validate()
                .map_err(|e| Error::Data(format!("channel {c}: {e}")))?;
        }
        Ok(ModelParamSet {
            provenance: file.provenance,
            source: file.source,
            channels,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema: 1,
            provenance: self.provenance.clone(),
            source: self.source.clone(),
            channels: ColorChannel::ALL
                .iter()
                .map(|&c| (c, self.channels[c.index()].clone()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Every channel passes every contrast; used to check the filtering
    /// pipeline reduces to reconstruction and quantisation.
    pub fn all_pass() -> Self {
        let rec = |p: ChannelParams| ChannelRecord {
            log_s0: p.log_s0,
            k_rho: p.k_rho,
            k_ecc: p.k_ecc,
            stimulus_sensitivity: p.stimulus_sensitivity,
            cone_contrast: None,
            poles: Vec::new(),
        };
        let p = ChannelParams::all_pass();
        ModelParamSet {
            provenance: "all-pass".into(),
            source: String::new(),
            channels: [rec(p), rec(p), rec(p)],
        }
    }

    pub fn params(&self, channel: ColorChannel) -> ChannelParams {
        self.channels[channel.index()].params()
    }

    pub fn record(&self, channel: ColorChannel) -> &ChannelRecord {
        &self.channels[channel.index()]
    }

    /// Replaces one channel's fitted coefficients, keeping its stimulus
    /// metadata, and retags the set.
    pub fn with_channel(&self, channel: ColorChannel, params: ChannelParams, provenance: impl Into<String>) -> Self {
        let mut out = self.clone();
        let rec = &mut out.channels[channel.index()];
        rec.log_s0 = params.log_s0;
        rec.k_rho = params.k_rho;
        rec.k_ecc = params.k_ecc;
        rec.stimulus_sensitivity = params.stimulus_sensitivity;
        out.provenance = provenance.into();
        out
    }

    /// Multiplies every baseline sensitivity by `factor` (adds log10 factor).
    pub fn scale_baseline(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for rec in &mut out.channels {
            rec.log_s0 += factor.log10();
        }
        out
    }
}
