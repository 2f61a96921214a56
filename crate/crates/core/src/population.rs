//! Spread of resolution thresholds across observers.
//!
//! Thresholds are normally distributed in the cube-root frequency space
//! `f(rho) = rho^(1/3)`. The centre of the distribution is the model
//! prediction at that eccentricity; the spread `sigma` and normalisation
//! `scale` are tabulated at 0, 10 and 20 degrees and linearly interpolated
//! (and extrapolated) in between.
//!
//! Quantiles and CDFs do not use `scale`; it only enters [`PopulationModel::density`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csf::{ColorChannel, ModelParamSet};
use crate::error::{domain, Error, Result};
use crate::{freq, normal};

const REFERENCE_POPULATION_JSON: &str = include_str!("../data/reference_population.json");

/// One tabulated (eccentricity, sigma, scale) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadCell {
    pub eccentricity: f64,
    pub sigma: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PopulationFile {
    schema: u32,
    #[serde(default)]
    source: String,
    channels: BTreeMap<ColorChannel, Vec<SpreadCell>>,
}

/// Gaussian parameters of one (channel, eccentricity) in transformed units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationParams {
    pub channel: ColorChannel,
    pub eccentricity: f64,
    pub mu: f64,
    pub sigma: f64,
    pub scale: f64,
    /// Set when linear extrapolation drove sigma or scale non-positive and the
    /// value was clamped to the outermost tabulated cell.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct PopulationModel {
    pub model: ModelParamSet,
    pub source: String,
    tables: [Vec<SpreadCell>; 3],
}

impl PopulationModel {
    /// Shipped spread table paired with the shipped model.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_POPULATION_JSON, ModelParamSet::reference())
            .expect("embedded reference population is valid")
    }

    pub fn from_json(text: &str, model: ModelParamSet) -> Result<Self> {
        let file: PopulationFile = serde_json::from_str(text)?;
        if file.schema != 1 {
            return Err(Error::Data(format!("unsupported population schema {}", file.schema)));
        }
        let mut tables: [Vec<SpreadCell>; 3] = Default::default();
        for c in ColorChannel::ALL {
            let mut cells = file
                .channels
                .get(&c)
                .cloned()
                .ok_or_else(|| Error::Data(format!("population file is missing channel {c}")))?;
            if cells.len() < 2 {
                return Err(Error::Data(format!("channel {c} needs at least two eccentricities")));
            }
            cells.sort_by(|a, b| a.eccentricity.total_cmp(&b.eccentricity));
            for w in cells.windows(2) {
                if w[0].eccentricity == w[1].eccentricity {
                    return Err(Error::Data(format!("duplicate eccentricity in channel {c}")));
                }
            }
            if cells.iter().any(|cell| !(cell.sigma > 0.0 && cell.scale > 0.0)) {
                return Err(Error::Data(format!("sigma and scale must be positive in channel {c}")));
            }
            tables[c.index()] = cells;
        }
        Ok(PopulationModel {
            model,
            source: file.source,
            tables,
        })
    }

    pub fn load(path: &Path, model: ModelParamSet) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, model)
    }

    pub fn with_model(mut self, model: ModelParamSet) -> Self {
        self.model = model;
        self
    }

    pub fn table(&self, channel: ColorChannel) -> &[SpreadCell] {
        &self.tables[channel.index()]
    }

    /// Gaussian parameters at eccentricity `ecc_deg`.
    pub fn params_at(&self, channel: ColorChannel, ecc_deg: f64) -> Result<PopulationParams> {
        if !(ecc_deg >= 0.0) || !ecc_deg.is_finite() {
            return Err(domain(format!("eccentricity must be finite and >= 0, got {ecc_deg}")));
        }
        let rho = self.model.params(channel).threshold_cpd(ecc_deg)?;
        let mu = freq::forward(rho);
        let cells = self.table(channel);
        let (sigma, scale, clamped) = interpolate(cells, ecc_deg);
        if clamped {
            log::warn!(
                "extrapolated population spread for {channel} at {ecc_deg} deg is non-positive; clamped to the outermost tabulated cell"
            );
        }
        Ok(PopulationParams {
            channel,
            eccentricity: ecc_deg,
            mu,
            sigma,
            scale,
            clamped,
        })
    }

    /// Threshold (ppd) below which a fraction `q` of observers fall.
    pub fn threshold_quantile(&self, channel: ColorChannel, ecc_deg: f64, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("quantile must be in (0, 1), got {q}")));
        }
        let p = self.params_at(channel, ecc_deg)?;
        let x = p.mu + p.sigma * normal::quantile(q);
        if x <= 0.0 {
            return Ok(0.0);
        }
        Ok(freq::to_ppd(x))
    }

    /// Fraction of observers whose threshold is at or below `display_ppd`,
    /// i.e. for whom a display of that resolution is indistinguishable from
    /// a perfect one.
    pub fn fraction_satisfied(&self, channel: ColorChannel, ecc_deg: f64, display_ppd: f64) -> Result<f64> {
        if !(display_ppd >= 0.0) {
            return Err(domain(format!("display ppd must be >= 0, got {display_ppd}")));
        }
        let p = self.params_at(channel, ecc_deg)?;
        if display_ppd.is_infinite() {
            return Ok(1.0);
        }
        Ok(normal::cdf((freq::from_ppd(display_ppd) - p.mu) / p.sigma))
    }

    /// Normalised Gaussian density of thresholds at frequency `rho_cpd`,
    /// including the `1/scale` factor.
    pub fn density(&self, channel: ColorChannel, ecc_deg: f64, rho_cpd: f64) -> Result<f64> {
        if !(rho_cpd > 0.0) {
            return Err(domain(format!("spatial frequency must be > 0, got {rho_cpd}")));
        }
        let p = self.params_at(channel, ecc_deg)?;
        let z = (freq::forward(rho_cpd) - p.mu) / p.sigma;
        Ok(1.0 / p.scale * (1.0 / (p.sigma * (2.0 * std::f64::consts::PI).sqrt())) * (-0.5 * z * z).exp())
    }
}

/// Piecewise-linear interpolation of (sigma, scale) with linear extrapolation
/// from the end segments. Exact grid hits return the stored values.
fn interpolate(cells: &[SpreadCell], e: f64) -> (f64, f64, bool) {
    if let Some(cell) = cells.iter().find(|c| c.eccentricity == e) {
        return (cell.sigma, cell.scale, false);
    }
    let n = cells.len();
    let seg = match cells.iter().position(|c| c.eccentricity > e) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (a, b) = (cells[seg], cells[seg + 1]);
    let t = (e - a.eccentricity) / (b.eccentricity - a.eccentricity);
    let mut sigma = a.sigma + (b.sigma - a.sigma) * t;
    let mut scale = a.scale + (b.scale - a.scale) * t;
    let mut clamped = false;
    let edge = if e > cells[n - 1].eccentricity {
        cells[n - 1]
    } else {
        cells[0]
    };
    if sigma <= 0.0 {
        sigma = edge.sigma;
        clamped = true;
    }
    if scale <= 0.0 {
        scale = edge.scale;
        clamped = true;
    }
    (sigma, scale, clamped)
}
