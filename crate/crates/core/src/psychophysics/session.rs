use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::quest::{QuestConfig, QuestState};
use super::weibull::PsychometricFunction;
use crate::csf::ColorChannel;
use crate::error::Result;
use crate::fitting::TrialRecord;

/// Labels copied onto every simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLabels {
    pub observer_id: String,
    pub channel: ColorChannel,
    pub eccentricity: f64,
}

impl Default for SessionLabels {
    fn default() -> Self {
        SessionLabels {
            observer_id: "sim".into(),
            channel: ColorChannel::Achromatic,
            eccentricity: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    /// Every individual presentation, repeats included.
    pub trials: Vec<TrialRecord>,
    /// Number of QUEST updates (one per aggregated response).
    pub updates: usize,
    pub estimate_ppd: f64,
    /// Posterior SD in transformed units.
    pub posterior_sd: f64,
    pub final_state: QuestState,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub seed: u64,
    pub estimate_ppd: f64,
    pub posterior_sd: f64,
    pub updates: usize,
}

impl SessionResult {
    pub fn summary(&self, seed: u64) -> SessionSummary {
        SessionSummary {
            seed,
            estimate_ppd: self.estimate_ppd,
            posterior_sd: self.posterior_sd,
            updates: self.updates,
        }
    }
}

/// Runs one simulated QUEST session against `observer`.
///
/// Each step places the stimulus at the posterior mean, draws the configured
/// number of Bernoulli responses from the observer, aggregates them (majority
/// of three by default) and applies a single update. Fully determined by
/// `seed`.
pub fn run_session(
    observer: &PsychometricFunction,
    config: &QuestConfig,
    labels: &SessionLabels,
    seed: u64,
) -> Result<SessionResult> {
    observer.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = QuestState::new(*config)?;
    let repeats = config.repeat.presentations();
    let mut trials = Vec::with_capacity(config.max_trials * repeats);

    while !state.should_stop() {
        let stimulus_ppd = state.next_ppd();
        let p = observer.p_correct_ppd(stimulus_ppd);
        let mut n_correct = 0;
        for _ in 0..repeats {
            let correct = rng.random::<f64>() < p;
            n_correct += correct as usize;
            trials.push(TrialRecord {
                observer_id: labels.observer_id.clone(),
                channel: labels.channel,
                eccentricity: labels.eccentricity,
                stimulus_ppd,
                correct,
            });
        }
        state = state.update(stimulus_ppd, 2 * n_correct > repeats);
    }

    Ok(SessionResult {
        trials,
        updates: state.trials(),
        estimate_ppd: state.estimate_ppd(),
        posterior_sd: state.sd(),
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::super::quest::{Prior, RepeatRule};
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let obs = PsychometricFunction::with_threshold_ppd(60.0).unwrap();
        let cfg = QuestConfig::default();
        let a = run_session(&obs, &cfg, &SessionLabels::default(), 42).unwrap();
        let b = run_session(&obs, &cfg, &SessionLabels::default(), 42).unwrap();
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.estimate_ppd.to_bits(), b.estimate_ppd.to_bits());
        let c = run_session(&obs, &cfg, &SessionLabels::default(), 43).unwrap();
        assert_ne!(a.trials, c.trials);
    }

    #[test]
    fn session_length_bounds() {
        let obs = PsychometricFunction::with_threshold_ppd(60.0).unwrap();
        let cfg = QuestConfig::default();
        for seed in 0..50 {
            let r = run_session(&obs, &cfg, &SessionLabels::default(), seed).unwrap();
            assert!((30..=50).contains(&r.updates), "{}", r.updates);
            assert_eq!(r.trials.len(), 3 * r.updates);
        }
    }

    #[test]
    fn step_observer_recovered_within_one_cell() {
        let obs = PsychometricFunction::new(crate::freq::from_ppd(47.0), 1e4, 0.5, 0.0).unwrap();
        let cfg = QuestConfig {
            slope_beta: 1e4,
            lapse_lambda: 0.0,
            prior: Prior::Uniform,
            repeat: RepeatRule::MajorityOfThree,
            // guesses above threshold only halve the posterior mass, so the
            // default 50-update cap is too short to isolate one cell
            stop_sd: 0.004,
            max_trials: 400,
            ..QuestConfig::default()
        };
        for seed in 0..20 {
            let r = run_session(&obs, &cfg, &SessionLabels::default(), seed).unwrap();
            let step = r.final_state.grid_step();
            let err = (r.final_state.mean() - obs.threshold_t).abs();
            assert!(err <= step, "seed {seed}: err {err} > {step}");
        }
    }
}
