use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ThresholdRecord;
use crate::csf::{ChannelParams, ColorChannel, ModelParamSet};
use crate::error::{Error, Result};
use crate::freq;

pub const FIT_SCHEMA: u32 = 1;

/// Treatment of the baseline sensitivity during a fit.
///
/// With a single stimulus sensitivity the predicted thresholds depend on the
/// baseline and the frequency slope only through their ratio, so the two
/// cannot both be estimated. Anchoring holds the baseline fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Hold the baseline at the starting parameters' value.
    #[default]
    Initial,
    Fixed(f64),
    /// Estimate the baseline too. Rank deficient for single-stimulus data.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFitOptions {
    /// Starting point; the reference parameters for the channel when `None`.
    pub initial: Option<ChannelParams>,
    pub baseline: Baseline,
    pub max_iterations: usize,
}

impl Default for ModelFitOptions {
    fn default() -> Self {
        ModelFitOptions {
            initial: None,
            baseline: Baseline::Initial,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimates {
    pub log_s0: f64,
    pub k_rho: f64,
    pub k_ecc: f64,
}

/// Standard errors; `None` for held parameters or when there are no
/// residual degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamErrors {
    pub log_s0: Option<f64>,
    pub k_rho: Option<f64>,
    pub k_ecc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema: u32,
    pub channel: ColorChannel,
    pub stimulus_sensitivity: f64,
    pub estimates: ParamEstimates,
    pub standard_errors: ParamErrors,
    /// Predicted minus observed, in transformed units, one per input record.
    pub residuals: Vec<f64>,
    pub residual_sum_of_squares: f64,
    /// Residual sum of squares at the start and after each accepted step.
    pub trace: Vec<f64>,
    pub baseline: Baseline,
    pub converged: bool,
    pub iterations: usize,
    pub provenance: String,
}

impl FitResult {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            log_s0: self.estimates.log_s0,
            k_rho: self.estimates.k_rho,
            k_ecc: self.estimates.k_ecc,
            stimulus_sensitivity: self.stimulus_sensitivity,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Threshold resolution in ppd predicted by `params` at `ecc_deg`.
pub fn predicted_ppd(params: &ChannelParams, ecc_deg: f64) -> Result<f64> {
    params.threshold_resolution(ecc_deg)
}

struct Problem {
    ecc: Vec<f64>,
    observed: Vec<f64>,
    log_s: f64,
    /// Baseline when held, `None` when estimated.
    fixed_log_s0: Option<f64>,
}

impl Problem {
    fn unpack(&self, theta: &[f64]) -> (f64, f64, f64) {
        match self.fixed_log_s0 {
            Some(b) => (b, theta[0], theta[1]),
            None => (theta[0], theta[1], theta[2]),
        }
    }

    /// Residuals, or `None` where the parameters give no finite positive
    /// threshold for some record.
    fn residuals(&self, theta: &[f64]) -> Option<DVector<f64>> {
        let (log_s0, k_rho, k_ecc) = self.unpack(theta);
        let d = self.log_s - log_s0;
        let mut r = DVector::zeros(self.ecc.len());
        for (i, &e) in self.ecc.iter().enumerate() {
            let cpd = d / (k_rho * (1.0 + k_ecc * e));
            if !(cpd > 0.0 && cpd.is_finite()) {
                return None;
            }
            r[i] = freq::forward(cpd) - self.observed[i];
        }
        Some(r)
    }

    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let (log_s0, k_rho, k_ecc) = self.unpack(theta);
        let d = self.log_s - log_s0;
        let cols = theta.len();
        let mut j = DMatrix::zeros(self.ecc.len(), cols);
        for (i, &e) in self.ecc.iter().enumerate() {
            let g = 1.0 + k_ecc * e;
            let f = freq::forward(d / (k_rho * g));
            let d_rho = -f / (3.0 * k_rho);
            let d_ecc = -f * e / (3.0 * g);
            match self.fixed_log_s0 {
                Some(_) => {
                    j[(i, 0)] = d_rho;
                    j[(i, 1)] = d_ecc;
                }
                None => {
                    j[(i, 0)] = -f / (3.0 * d);
                    j[(i, 1)] = d_rho;
                    j[(i, 2)] = d_ecc;
                }
            }
        }
        j
    }
}

fn check_rank(j: &DMatrix<f64>) -> Result<()> {
    // scale columns first so the test ignores parameter units
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return Err(Error::Unidentifiable(
                "a parameter has no effect on the predictions".into(),
            ));
        }
        col /= n;
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 1e-8 * max {
        return Err(Error::Unidentifiable(format!(
            "Jacobian is rank deficient (singular values {:.3e} .. {:.3e})",
            min, max
        )));
    }
    Ok(())
}

/// Least-squares fit of the resolution-limit model to one channel's
/// thresholds, in transformed-frequency space.
///
/// Excluded records and records for other channels are ignored. Uses
/// Levenberg-Marquardt with multiplicative damping; only steps that reduce
/// the residual sum of squares are accepted.
pub fn fit_model(
    records: &[ThresholdRecord],
    channel: ColorChannel,
    stimulus_sensitivity: f64,
    opts: &ModelFitOptions,
) -> Result<FitResult> {
    if !(stimulus_sensitivity > 0.0 && stimulus_sensitivity.is_finite()) {
        return Err(Error::InvalidInput("stimulus sensitivity must be positive".into()));
    }
    let used: Vec<&ThresholdRecord> = records
        .iter()
        .filter(|r| r.channel == channel && !r.is_excluded())
        .collect();
    if used.is_empty() {
        return Err(Error::InvalidInput(format!("no usable {channel} records")));
    }
    if let Some(r) = used
        .iter()
        .find(|r| !(r.threshold_ppd > 0.0 && r.threshold_ppd.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "threshold must be positive, got {}",
            r.threshold_ppd
        )));
    }
    if let Some(r) = used
        .iter()
        .find(|r| !(r.eccentricity >= 0.0 && r.eccentricity.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "eccentricity must be >= 0, got {}",
            r.eccentricity
        )));
    }
    let mut eccs: Vec<f64> = used.iter().map(|r| r.eccentricity).collect();
    eccs.sort_by(f64::total_cmp);
    eccs.dedup();
    if eccs.len() < 2 {
        return Err(Error::Unidentifiable(
            "eccentricity dependence needs thresholds at two or more eccentricities".into(),
        ));
    }

    let start = match opts.initial {
        Some(p) => p,
        None => ModelParamSet::reference().params(channel),
    };
    let fixed_log_s0 = match opts.baseline {
        Baseline::Initial => Some(start.log_s0),
        Baseline::Fixed(b) => Some(b),
        Baseline::Free => None,
    };
    let problem = Problem {
        ecc: used.iter().map(|r| r.eccentricity).collect(),
        observed: used.iter().map(|r| freq::from_ppd(r.threshold_ppd)).collect(),
        log_s: stimulus_sensitivity.log10(),
        fixed_log_s0,
    };
    let mut theta: Vec<f64> = match fixed_log_s0 {
        Some(_) => vec![start.k_rho, start.k_ecc],
        None => vec![start.log_s0, start.k_rho, start.k_ecc],
    };
    let p = theta.len();

    let mut r = problem
        .residuals(&theta)
        .ok_or_else(|| Error::InvalidInput("starting parameters give no finite threshold for these records".into()))?;
    check_rank(&problem.jacobian(&theta))?;

    let mut ssr = r.norm_squared();
    let mut trace = vec![ssr];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let j = problem.jacobian(&theta);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        if grad.amax() <= 1e-14 || ssr <= 1e-30 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            match problem.residuals(&trial) {
                Some(r_new) if r_new.norm_squared() < ssr => {
                    let ssr_new = r_new.norm_squared();
                    let rel_drop = (ssr - ssr_new) / ssr;
                    let small_step = step
                        .iter()
                        .zip(&theta)
                        .all(|(s, t)| s.abs() <= 1e-12 * t.abs().max(1e-12));
                    theta = trial;
                    r = r_new;
                    ssr = ssr_new;
                    trace.push(ssr);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if small_step || rel_drop < 1e-14 {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // no descent direction left at machine precision
            let scale = (1.0 + ssr).sqrt();
            converged = grad.amax() <= 1e-8 * scale;
            break;
        }
    }

    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            best_objective: ssr,
            best_params: theta,
            trace,
        });
    }

    let j = problem.jacobian(&theta);
    check_rank(&j)?;
    let dof = problem.ecc.len() as i64 - p as i64;
    let mut se: Vec<Option<f64>> = vec![None; p];
    if dof > 0 {
        if let Some(inv) = (j.transpose() * &j).try_inverse() {
            let sigma2 = ssr / dof as f64;
            for (k, s) in se.iter_mut().enumerate() {
                *s = Some((sigma2 * inv[(k, k)]).max(0.0).sqrt());
            }
        }
    }

    let (log_s0, k_rho, k_ecc) = problem.unpack(&theta);
    let standard_errors = match fixed_log_s0 {
        Some(_) => ParamErrors {
            log_s0: None,
            k_rho: se[0],
            k_ecc: se[1],
        },
        None => ParamErrors {
            log_s0: se[0],
            k_rho: se[1],
            k_ecc: se[2],
        },
    };
    Ok(FitResult {
        schema: FIT_SCHEMA,
        channel,
        stimulus_sensitivity,
        estimates: ParamEstimates { log_s0, k_rho, k_ecc },
        standard_errors,
        residuals: r.iter().copied().collect(),
        residual_sum_of_squares: ssr,
        trace,
        baseline: opts.baseline,
        converged,
        iterations,
        provenance: format!("fit-{}-{}pts", channel.as_str(), problem.ecc.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(params: &ChannelParams, channel: ColorChannel) -> Vec<ThresholdRecord> {
        [0.0, 10.0, 20.0]
            .iter()
            .map(|&e| ThresholdRecord::new("syn", channel, e, predicted_ppd(params, e).unwrap()))
            .collect()
    }

    #[test]
    fn round_trip_from_perturbed_start() {
        for c in ColorChannel::ALL {
            let truth = ModelParamSet::reference().params(c);
            let recs = synthetic(&truth, c);
            let start = ChannelParams {
                k_rho: truth.k_rho * 1.3,
                k_ecc: truth.k_ecc * 0.6,
                ..truth
            };
            let opts = ModelFitOptions {
                initial: Some(start),
                ..Default::default()
            };
            let fit = fit_model(&recs, c, truth.stimulus_sensitivity, &opts).unwrap();
            assert!(fit.converged);
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(fit.estimates.log_s0, truth.log_s0) < 1e-6);
            assert!(
                rel(fit.estimates.k_rho, truth.k_rho) < 1e-6,
                "{c}: {} vs {}",
                fit.estimates.k_rho,
                truth.k_rho
            );
            assert!(rel(fit.estimates.k_ecc, truth.k_ecc) < 1e-6);
            assert_eq!(fit.residuals.len(), 3);
        }
    }

    #[test]
    fn single_eccentricity_is_unidentifiable() {
        let recs = vec![
            ThresholdRecord::new("a", ColorChannel::Achromatic, 10.0, 40.0),
            ThresholdRecord::new("b", ColorChannel::Achromatic, 10.0, 42.0),
        ];
        assert!(matches!(
            fit_model(&recs, ColorChannel::Achromatic, 1.09, &Default::default()),
            Err(Error::Unidentifiable(_))
        ));
    }

    #[test]
    fn free_baseline_with_one_stimulus_is_unidentifiable() {
        let truth = ModelParamSet::reference().params(ColorChannel::Achromatic);
        let recs = synthetic(&truth, ColorChannel::Achromatic);
        let opts = ModelFitOptions {
            baseline: Baseline::Free,
            ..Default::default()
        };
        assert!(matches!(
            fit_model(&recs, ColorChannel::Achromatic, 1.09, &opts),
            Err(Error::Unidentifiable(_))
        ));
    }

    #[test]
    fn excluded_and_foreign_records_are_ignored() {
        let truth = ModelParamSet::reference().params(ColorChannel::Achromatic);
        let mut recs = synthetic(&truth, ColorChannel::Achromatic);
        let mut bad = ThresholdRecord::new("x", ColorChannel::Achromatic, 5.0, 500.0);
        bad.excluded = Some("outlier".into());
        recs.push(bad);
        recs.push(ThresholdRecord::new("y", ColorChannel::RedGreen, 5.0, 5.0));
        let fit = fit_model(
            &recs,
            ColorChannel::Achromatic,
            truth.stimulus_sensitivity,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(fit.residuals.len(), 3);
        assert!(fit.residual_sum_of_squares < 1e-20);
    }

    #[test]
    fn trace_is_monotone() {
        let recs = vec![
            ThresholdRecord::new("a", ColorChannel::RedGreen, 0.0, 86.77),
            ThresholdRecord::new("a", ColorChannel::RedGreen, 10.0, 19.24),
            ThresholdRecord::new("a", ColorChannel::RedGreen, 20.0, 7.461),
            ThresholdRecord::new("b", ColorChannel::RedGreen, 0.0, 80.0),
            ThresholdRecord::new("b", ColorChannel::RedGreen, 20.0, 9.0),
        ];
        let start = ChannelParams {
            k_rho: -0.1,
            k_ecc: 0.05,
            ..ModelParamSet::reference().params(ColorChannel::RedGreen)
        };
        let opts = ModelFitOptions {
            initial: Some(start),
            ..Default::default()
        };
        let fit = fit_model(&recs, ColorChannel::RedGreen, 7.42, &opts).unwrap();
        assert!(fit.trace.len() > 2);
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.standard_errors.k_rho.is_some() && fit.standard_errors.log_s0.is_none());
    }

    #[test]
    fn result_serializes() {
        let truth = ModelParamSet::reference().params(ColorChannel::YellowViolet);
        let fit = fit_model(
            &synthetic(&truth, ColorChannel::YellowViolet),
            ColorChannel::YellowViolet,
            truth.stimulus_sensitivity,
            &Default::default(),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&fit.to_json().unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["channel"], "yellow_violet");
        assert!(v["estimates"]["k_ecc"].is_number());
    }
}
