use serde::{Deserialize, Serialize};

use super::weibull::{majority_of_three, p_correct, DEFAULT_GUESS, DEFAULT_LAPSE, DEFAULT_SLOPE};
use crate::error::{domain, Result};
use crate::freq;

/// How consecutive repeats of one stimulus are folded into a QUEST update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepeatRule {
    /// One presentation per update.
    Single,
    /// Three presentations, majority vote, one update.
    MajorityOfThree,
}

impl RepeatRule {
    pub fn presentations(self) -> usize {
        match self {
            RepeatRule::Single => 1,
            RepeatRule::MajorityOfThree => 3,
        }
    }

    /// Probability that the aggregated response is correct.
    #[inline]
    pub fn aggregate_probability(self, p: f64) -> f64 {
        match self {
            RepeatRule::Single => p,
            RepeatRule::MajorityOfThree => majority_of_three(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Uniform,
    /// Gaussian in transformed units centred on `mean_ppd`.
    Gaussian {
        mean_ppd: f64,
        sd: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestConfig {
    pub grid_points: usize,
    pub grid_min_cpd: f64,
    pub grid_max_cpd: f64,
    pub prior: Prior,
    pub slope_beta: f64,
    pub guess_gamma: f64,
    pub lapse_lambda: f64,
    pub repeat: RepeatRule,
    /// Posterior SD (transformed units) at which the session may stop.
    pub stop_sd: f64,
    pub min_trials: usize,
    pub max_trials: usize,
}

impl Default for QuestConfig {
    fn default() -> Self {
        QuestConfig {
            grid_points: 400,
            grid_min_cpd: 0.5,
            grid_max_cpd: 80.0,
            prior: Prior::Gaussian {
                mean_ppd: 60.0,
                sd: 0.5,
            },
            slope_beta: DEFAULT_SLOPE,
            guess_gamma: DEFAULT_GUESS,
            lapse_lambda: DEFAULT_LAPSE,
            repeat: RepeatRule::MajorityOfThree,
            stop_sd: 0.07,
            min_trials: 30,
            max_trials: 50,
        }
    }
}

/// Posterior over the threshold on a uniform grid in transformed units.
///
/// The state is a value: [`QuestState::update`] consumes it and returns the
/// successor, so sessions never share mutable state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestState {
    config: QuestConfig,
    grid: Vec<f64>,
    log_posterior: Vec<f64>,
    posterior: Vec<f64>,
    trials: usize,
}

impl QuestState {
    pub fn new(config: QuestConfig) -> Result<Self> {
        if config.grid_points < 2 {
            return Err(domain("QUEST grid needs at least two points"));
        }
        if !(config.grid_min_cpd > 0.0 && config.grid_max_cpd > config.grid_min_cpd) {
            return Err(domain("QUEST grid bounds must satisfy 0 < min < max"));
        }
        if config.min_trials > config.max_trials || config.max_trials == 0 {
            return Err(domain("need 0 < min_trials <= max_trials"));
        }
        if !(config.stop_sd > 0.0) {
            return Err(domain("stop SD must be positive"));
        }
        super::weibull::PsychometricFunction::new(0.0, config.slope_beta, config.guess_gamma, config.lapse_lambda)?;

        let lo = freq::forward(config.grid_min_cpd);
        let hi = freq::forward(config.grid_max_cpd);
        let step = (hi - lo) / (config.grid_points - 1) as f64;
        let grid: Vec<f64> = (0..config.grid_points).map(|i| lo + step * i as f64).collect();
        let log_posterior: Vec<f64> = match config.prior {
            Prior::Uniform => vec![0.0; grid.len()],
            Prior::Gaussian { mean_ppd, sd } => {
                if !(mean_ppd > 0.0 && sd > 0.0) {
                    return Err(domain("prior mean and SD must be positive"));
                }
                let m = freq::from_ppd(mean_ppd);
                grid.iter().map(|&t| -0.5 * ((t - m) / sd).powi(2)).collect()
            }
        };
        let mut state = QuestState {
            config,
            grid,
            posterior: vec![0.0; log_posterior.len()],
            log_posterior,
            trials: 0,
        };
        state.normalize();
        Ok(state)
    }

    fn normalize(&mut self) {
        let max = self.log_posterior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, &lp) in self.posterior.iter_mut().zip(&self.log_posterior) {
            *p = (lp - max).exp();
            sum += *p;
        }
        let log_norm = max + sum.ln();
        for lp in &mut self.log_posterior {
            *lp -= log_norm;
        }
        for p in &mut self.posterior {
            *p /= sum;
        }
    }

    pub fn config(&self) -> &QuestConfig {
        &self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn grid_step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Bayesian update with one (aggregated) response at `stimulus_ppd`.
    /// Stimuli outside the grid are clamped to its nearest edge.
    pub fn update(mut self, stimulus_ppd: f64, correct: bool) -> Self {
        let mut x = freq::from_ppd(stimulus_ppd);
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(x >= lo && x <= hi) {
            log::warn!("stimulus {stimulus_ppd} ppd outside the QUEST grid; clamped");
            x = if x.is_nan() || x < lo { lo } else { hi };
        }
        let c = &self.config;
        for (lp, &t) in self.log_posterior.iter_mut().zip(&self.grid) {
            let p = c
                .repeat
                .aggregate_probability(p_correct(x, t, c.slope_beta, c.guess_gamma, c.lapse_lambda));
            *lp += if correct { p.ln() } else { (1.0 - p).ln() };
        }
        self.trials += 1;
        self.normalize();
        self
    }

    /// Posterior mean of the threshold (transformed units).
    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.posterior).map(|(t, p)| t * p).sum()
    }

    /// Posterior standard deviation of the threshold (transformed units).
    pub fn sd(&self) -> f64 {
        let m = self.mean();
        self.grid
            .iter()
            .zip(&self.posterior)
            .map(|(t, p)| p * (t - m) * (t - m))
            .sum::<f64>()
            .sqrt()
    }

    /// Next stimulus: the posterior mean converted to ppd.
    pub fn next_ppd(&self) -> f64 {
        freq::to_ppd(self.mean())
    }

    pub fn estimate_ppd(&self) -> f64 {
        self.next_ppd()
    }

    pub fn should_stop(&self) -> bool {
        should_stop(self.trials, self.sd(), &self.config)
    }
}

/// Stops at `max_trials`, or once `min_trials` are done and the posterior SD
/// is at or below `stop_sd`.
pub fn should_stop(trials: usize, sd: f64, config: &QuestConfig) -> bool {
    trials >= config.max_trials || (trials >= config.min_trials && sd <= config.stop_sd)
}
