use serde::Serialize;

use super::TrialRecord;
use crate::error::{Error, Result};
use crate::freq;
use crate::psychophysics::{DEFAULT_GUESS, DEFAULT_LAPSE, DEFAULT_SLOPE};

const LN_10: f64 = std::f64::consts::LN_10;
const MIN_TRIALS: usize = 10;
const MIN_LEVELS: usize = 3;
const GRID_POINTS: usize = 400;
const SLOPE_RANGE: (f64, f64) = (0.25, 100.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsychometricFitOptions {
    /// Fit the slope as well as the threshold.
    pub fit_slope: bool,
    /// Slope used when it is not fitted, and the starting value otherwise.
    pub slope: f64,
    pub guess: f64,
    pub lapse: f64,
    pub max_iterations: usize,
}

impl Default for PsychometricFitOptions {
    fn default() -> Self {
        PsychometricFitOptions {
            fit_slope: false,
            slope: DEFAULT_SLOPE,
            guess: DEFAULT_GUESS,
            lapse: DEFAULT_LAPSE,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsychometricFit {
    pub threshold_ppd: f64,
    /// Threshold in transformed units.
    pub threshold_t: f64,
    pub slope: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Transformed stimulus level and response of each trial.
fn observations(trials: &[TrialRecord]) -> Vec<(f64, bool)> {
    trials
        .iter()
        .map(|t| (freq::from_ppd(t.stimulus_ppd), t.correct))
        .collect()
}

#[inline]
fn ll_terms(obs: &[(f64, bool)], t: f64, beta: f64, guess: f64, lapse: f64) -> f64 {
    let a = 1.0 - guess - lapse;
    obs.iter()
        .map(|&(x, c)| {
            let u = (LN_10 * beta * (t - x)).exp();
            let p = guess + a * (-(-u).exp_m1());
            if c {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

#[inline]
fn grad_terms(obs: &[(f64, bool)], t: f64, beta: f64, guess: f64, lapse: f64) -> [f64; 2] {
    let a = 1.0 - guess - lapse;
    let mut g = [0.0; 2];
    for &(x, c) in obs {
        let u = (LN_10 * beta * (t - x)).exp();
        let e = (-u).exp();
        let p = guess + a * (-(-u).exp_m1());
        let dll_dp = if c { 1.0 / p } else { -1.0 / (1.0 - p) };
        let common = dll_dp * a * e * u * LN_10;
        g[0] += common * beta;
        g[1] += common * (t - x);
    }
    g
}

/// Bernoulli log-likelihood of the trials under a Weibull with the given
/// threshold (transformed units) and slope.
pub fn log_likelihood(trials: &[TrialRecord], threshold_t: f64, slope: f64, guess: f64, lapse: f64) -> f64 {
    ll_terms(&observations(trials), threshold_t, slope, guess, lapse)
}

/// Analytic gradient of [`log_likelihood`] with respect to (threshold, slope).
pub fn log_likelihood_gradient(
    trials: &[TrialRecord],
    threshold_t: f64,
    slope: f64,
    guess: f64,
    lapse: f64,
) -> [f64; 2] {
    grad_terms(&observations(trials), threshold_t, slope, guess, lapse)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximum-likelihood Weibull fit to binary 2IFC responses.
///
/// A grid search over the threshold (and log-slope, when fitted) brackets the
/// optimum, golden-section search refines it, and Newton steps on the
/// analytic gradient polish it until the gradient vanishes.
pub fn fit_psychometric(trials: &[TrialRecord], opts: &PsychometricFitOptions) -> Result<PsychometricFit> {
    if trials.len() < MIN_TRIALS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_TRIALS} trials, got {}",
            trials.len()
        )));
    }
    if trials.iter().any(|t| !(t.stimulus_ppd > 0.0)) {
        return Err(Error::InvalidInput("stimulus ppd must be positive".into()));
    }
    let obs = observations(trials);
    let mut levels: Vec<f64> = obs.iter().map(|o| o.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < MIN_LEVELS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_LEVELS} distinct stimulus levels, got {}",
            levels.len()
        )));
    }
    let n_correct = obs.iter().filter(|o| o.1).count();
    if n_correct == 0 || n_correct == obs.len() {
        return Err(Error::OutsideSampledRange(format!(
            "{n_correct} of {} responses correct; the likelihood is monotone in the threshold",
            obs.len()
        )));
    }

    let (g, l) = (opts.guess, opts.lapse);
    let (x_lo, x_hi) = (levels[0], levels[levels.len() - 1]);
    let t_lo = x_lo - 1.0;
    let t_hi = x_hi + 1.0;
    let dt = (t_hi - t_lo) / (GRID_POINTS - 1) as f64;
    let t_at = |i: usize| t_lo + dt * i as f64;

    let slopes: Vec<f64> = if opts.fit_slope {
        let n = 48;
        let (a, b) = (SLOPE_RANGE.0.ln(), SLOPE_RANGE.1.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    } else {
        vec![opts.slope]
    };

    let mut best = (f64::NEG_INFINITY, 0usize, opts.slope);
    for &beta in &slopes {
        for i in 0..GRID_POINTS {
            let ll = ll_terms(&obs, t_at(i), beta, g, l);
            if ll > best.0 {
                best = (ll, i, beta);
            }
        }
    }
    let (_, i_best, mut beta) = best;
    if i_best == 0 || i_best == GRID_POINTS - 1 {
        return Err(Error::OutsideSampledRange(format!(
            "likelihood peaks at the edge of the search range ({:.3} ppd)",
            freq::to_ppd(t_at(i_best).max(0.0))
        )));
    }

    let mut t = golden_max(
        |t| ll_terms(&obs, t, beta, g, l),
        t_at(i_best - 1),
        t_at(i_best + 1),
        1e-10,
    );
    if opts.fit_slope {
        // alternate one-dimensional refinements before the joint Newton polish
        for _ in 0..20 {
            let lb = beta.ln();
            beta = golden_max(|lb| ll_terms(&obs, t, lb.exp(), g, l), lb - 0.5, lb + 0.5, 1e-10).exp();
            t = golden_max(|t| ll_terms(&obs, t, beta, g, l), t - dt, t + dt, 1e-10);
        }
    }

    // Newton polish on the analytic gradient with a finite-difference Hessian.
    let mut iterations = 0;
    let mut ll = ll_terms(&obs, t, beta, g, l);
    let grad_norm = |t: f64, beta: f64| {
        let gr = grad_terms(&obs, t, beta, g, l);
        if opts.fit_slope {
            gr[0].hypot(gr[1])
        } else {
            gr[0].abs()
        }
    };
    while iterations < opts.max_iterations && grad_norm(t, beta) > 1e-10 {
        iterations += 1;
        let gr = grad_terms(&obs, t, beta, g, l);
        let h = 1e-6;
        let (nt, nb) = if opts.fit_slope {
            let gt_p = grad_terms(&obs, t + h, beta, g, l);
            let gt_m = grad_terms(&obs, t - h, beta, g, l);
            let gb_p = grad_terms(&obs, t, beta + h, g, l);
            let gb_m = grad_terms(&obs, t, beta - h, g, l);
            let htt = (gt_p[0] - gt_m[0]) / (2.0 * h);
            let hbb = (gb_p[1] - gb_m[1]) / (2.0 * h);
            let htb = 0.5 * ((gt_p[1] - gt_m[1]) + (gb_p[0] - gb_m[0])) / (2.0 * h);
            let det = htt * hbb - htb * htb;
            if !(htt < 0.0 && det > 0.0) {
                break;
            }
            let st = (hbb * gr[0] - htb * gr[1]) / det;
            let sb = (htt * gr[1] - htb * gr[0]) / det;
            (t - st, beta - sb)
        } else {
            let htt = (grad_terms(&obs, t + h, beta, g, l)[0] - grad_terms(&obs, t - h, beta, g, l)[0]) / (2.0 * h);
            if !(htt < 0.0) {
                break;
            }
            (t - gr[0] / htt, beta)
        };
        let new_ll = ll_terms(&obs, nt, nb, g, l);
        if !(new_ll >= ll - 1e-12 * ll.abs()) || !(nb > 0.0) {
            break;
        }
        t = nt;
        beta = nb;
        ll = new_ll;
    }

    if grad_norm(t, beta) > 1e-6 {
        return Err(Error::NonConvergence {
            iterations,
            best_objective: -ll,
            best_params: vec![t, beta],
            trace: Vec::new(),
        });
    }
    Ok(PsychometricFit {
        threshold_ppd: freq::to_ppd(t),
        threshold_t: t,
        slope: beta,
        log_likelihood: ll,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psychophysics::PsychometricFunction;
    use crate::ColorChannel;
    use rand::{Rng, SeedableRng};

    fn trial(ppd: f64, correct: bool) -> TrialRecord {
        TrialRecord {
            observer_id: "o".into(),
            channel: ColorChannel::Achromatic,
            eccentricity: 0.0,
            stimulus_ppd: ppd,
            correct,
        }
    }

    fn synthetic(threshold_ppd: f64, n: usize, seed: u64) -> Vec<TrialRecord> {
        let pf = PsychometricFunction::with_threshold_ppd(threshold_ppd).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                // levels spread +-0.3 transformed units around threshold
                let x = pf.threshold_t + 0.6 * ((i % 13) as f64 / 12.0 - 0.5);
                let ppd = freq::to_ppd(x);
                trial(ppd, rng.random::<f64>() < pf.p_correct_ppd(ppd))
            })
            .collect()
    }

    #[test]
    fn recovers_generating_threshold() {
        let trials = synthetic(60.0, 200, 5);
        let fit = fit_psychometric(&trials, &PsychometricFitOptions::default()).unwrap();
        assert!((fit.threshold_ppd - 60.0).abs() < 3.0, "{}", fit.threshold_ppd);
    }

    #[test]
    fn all_correct_is_an_error() {
        let trials: Vec<_> = (0..30).map(|i| trial(20.0 + i as f64, true)).collect();
        assert!(matches!(
            fit_psychometric(&trials, &PsychometricFitOptions::default()),
            Err(Error::OutsideSampledRange(_))
        ));
        let trials: Vec<_> = (0..30).map(|i| trial(20.0 + i as f64, false)).collect();
        assert!(fit_psychometric(&trials, &PsychometricFitOptions::default()).is_err());
    }

    #[test]
    fn preconditions() {
        let few: Vec<_> = (0..5).map(|i| trial(50.0 + i as f64, i % 2 == 0)).collect();
        assert!(matches!(
            fit_psychometric(&few, &Default::default()),
            Err(Error::InvalidInput(_))
        ));
        let two_levels: Vec<_> = (0..20)
            .map(|i| trial(if i % 2 == 0 { 40.0 } else { 60.0 }, i % 3 == 0))
            .collect();
        assert!(matches!(
            fit_psychometric(&two_levels, &Default::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn duplicating_trials_keeps_estimate() {
        let trials = synthetic(45.0, 120, 9);
        let doubled: Vec<_> = trials.iter().flat_map(|t| [t.clone(), t.clone()]).collect();
        for fit_slope in [false, true] {
            let opts = PsychometricFitOptions {
                fit_slope,
                ..Default::default()
            };
            let a = fit_psychometric(&trials, &opts).unwrap();
            let b = fit_psychometric(&doubled, &opts).unwrap();
            assert!(
                (a.threshold_ppd - b.threshold_ppd).abs() < 1e-9,
                "{} vs {}",
                a.threshold_ppd,
                b.threshold_ppd
            );
            assert!((a.slope - b.slope).abs() < 1e-9 * a.slope.max(1.0));
        }
    }

    fn check_stationary(trials: &[TrialRecord], fit: &PsychometricFit, opts: &PsychometricFitOptions) {
        let (g, l) = (opts.guess, opts.lapse);
        let grad = log_likelihood_gradient(trials, fit.threshold_t, fit.slope, g, l);
        let h = 1e-5;
        let fd_t = (log_likelihood(trials, fit.threshold_t + h, fit.slope, g, l)
            - log_likelihood(trials, fit.threshold_t - h, fit.slope, g, l))
            / (2.0 * h);
        assert!(grad[0].abs() < 1e-6, "dT {}", grad[0]);
        assert!(fd_t.abs() < 1e-4 * (1.0 + grad[0].abs()) + 1e-4, "fd dT {fd_t}");
        if opts.fit_slope {
            assert!(grad[1].abs() < 1e-6, "dB {}", grad[1]);
        }
        // away from the optimum the analytic gradient agrees with central
        // differences to 1e-4 relative
        let (t, b) = (fit.threshold_t + 0.05, fit.slope * 1.2);
        let an = log_likelihood_gradient(trials, t, b, g, l);
        let fd = [
            (log_likelihood(trials, t + h, b, g, l) - log_likelihood(trials, t - h, b, g, l)) / (2.0 * h),
            (log_likelihood(trials, t, b + h, g, l) - log_likelihood(trials, t, b - h, g, l)) / (2.0 * h),
        ];
        for k in 0..2 {
            assert!(
                ((an[k] - fd[k]) / an[k]).abs() < 1e-4,
                "component {k}: {} vs {}",
                an[k],
                fd[k]
            );
        }
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let trials = synthetic(70.0, 150, 21);
        for fit_slope in [false, true] {
            let opts = PsychometricFitOptions {
                fit_slope,
                ..Default::default()
            };
            let fit = fit_psychometric(&trials, &opts).unwrap();
            check_stationary(&trials, &fit, &opts);
        }
    }
}
