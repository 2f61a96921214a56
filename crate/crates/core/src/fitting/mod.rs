//! Data-analysis pipeline: outlier rejection, per-observer psychometric
//! maximum likelihood, and regression of the resolution-limit model.

mod io;
mod model;
mod outliers;
mod psychometric;

use serde::{Deserialize, Serialize};

use crate::csf::ColorChannel;

pub use io::{read_thresholds_csv, read_trials_csv, write_trials_csv};
pub use model::{fit_model, predicted_ppd, Baseline, FitResult, ModelFitOptions, ParamErrors, ParamEstimates};
pub use outliers::{flag_outliers, mad_outliers, modified_z_scores, MAD_CONSISTENCY, OUTLIER_Z};
pub use psychometric::{
    fit_psychometric, log_likelihood, log_likelihood_gradient, PsychometricFit, PsychometricFitOptions,
};

/// One observer's threshold for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub observer_id: String,
    pub channel: ColorChannel,
    pub eccentricity: f64,
    pub threshold_ppd: f64,
    #[serde(default)]
    pub excluded: Option<String>,
}

impl ThresholdRecord {
    pub fn new(observer_id: impl Into<String>, channel: ColorChannel, eccentricity: f64, threshold_ppd: f64) -> Self {
        ThresholdRecord {
            observer_id: observer_id.into(),
            channel,
            eccentricity,
            threshold_ppd,
            excluded: None,
        }
    }

    pub fn is_excluded(&self) -> bool {
        self.excluded.is_some()
    }
}

/// One binary 2IFC response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub observer_id: String,
    pub channel: ColorChannel,
    pub eccentricity: f64,
    pub stimulus_ppd: f64,
    pub correct: bool,
}
