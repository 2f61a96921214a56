use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unbounded threshold: stimulus sensitivity {stimulus} is not below baseline {baseline}")]
    UnboundedThreshold { stimulus: f64, baseline: f64 },

    #[error("threshold outside sampled range: {0}")]
    OutsideSampledRange(String),

    #[error("unidentifiable parameters: {0}")]
    Unidentifiable(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_objective:.6e})")]
    NonConvergence {
        iterations: usize,
        best_objective: f64,
        best_params: Vec<f64>,
        trace: Vec<f64>,
    },

    #[error("target {target_ppd} ppd out of range; required distances per factor: {}", format_required(.required))]
    TargetOutOfRange { target_ppd: f64, required: Vec<(u32, f64)> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data file error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

fn format_required(required: &[(u32, f64)]) -> String {
    required
        .iter()
        .map(|(k, d)| format!("{k}x: {d:.3} m"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
