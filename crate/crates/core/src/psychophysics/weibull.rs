use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::freq;

pub const DEFAULT_SLOPE: f64 = 3.5;
pub const DEFAULT_GUESS: f64 = 0.5;
pub const DEFAULT_LAPSE: f64 = 0.02;

/// Weibull psychometric function over the cube-root frequency axis.
///
/// `P(x) = guess + (1 - guess - lapse) * (1 - exp(-10^(slope * (threshold - x))))`
/// with `x = f(rho)`. Probability of a correct 2IFC response falls from
/// `1 - lapse` at low frequencies to `guess` at high ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsychometricFunction {
    /// Threshold in transformed units.
    pub threshold_t: f64,
    pub slope_beta: f64,
    pub guess_gamma: f64,
    pub lapse_lambda: f64,
}

impl PsychometricFunction {
    pub fn new(threshold_t: f64, slope_beta: f64, guess_gamma: f64, lapse_lambda: f64) -> Result<Self> {
        let pf = PsychometricFunction {
            threshold_t,
            slope_beta,
            guess_gamma,
            lapse_lambda,
        };
        pf.validate()?;
        Ok(pf)
    }

    /// Default 2IFC observer with the threshold given in ppd.
    pub fn with_threshold_ppd(threshold_ppd: f64) -> Result<Self> {
        if !(threshold_ppd > 0.0) {
            return Err(domain("threshold ppd must be > 0"));
        }
        Self::new(
            freq::from_ppd(threshold_ppd),
            DEFAULT_SLOPE,
            DEFAULT_GUESS,
            DEFAULT_LAPSE,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (g, l) = (self.guess_gamma, self.lapse_lambda);
        if !(g >= 0.0 && l >= 0.0 && g < 1.0 - l && 1.0 - l <= 1.0) {
            return Err(domain(format!(
                "need 0 <= guess < 1 - lapse <= 1 (guess {g}, lapse {l})"
            )));
        }
        if !(self.slope_beta > 0.0) {
            return Err(domain(format!("slope must be > 0, got {}", self.slope_beta)));
        }
        if !self.threshold_t.is_finite() {
            return Err(domain("threshold must be finite"));
        }
        Ok(())
    }

    pub fn threshold_ppd(&self) -> f64 {
        freq::to_ppd(self.threshold_t)
    }

    /// Probability of a correct response at transformed frequency `x`.
    #[inline]
    pub fn p_at(&self, x: f64) -> f64 {
        p_correct(
            x,
            self.threshold_t,
            self.slope_beta,
            self.guess_gamma,
            self.lapse_lambda,
        )
    }

    /// Probability of a correct response at `rho_cpd` cycles per degree.
    pub fn p_correct(&self, rho_cpd: f64) -> f64 {
        self.p_at(freq::forward(rho_cpd))
    }

    /// Probability of a correct response at a resolution of `ppd`.
    pub fn p_correct_ppd(&self, ppd: f64) -> f64 {
        self.p_at(freq::from_ppd(ppd))
    }

    /// Value at the threshold, independent of threshold and slope.
    pub fn p_at_threshold(&self) -> f64 {
        self.guess_gamma + (1.0 - self.guess_gamma - self.lapse_lambda) * (1.0 - (-1.0f64).exp())
    }
}

#[inline]
pub(crate) fn p_correct(x: f64, t: f64, beta: f64, guess: f64, lapse: f64) -> f64 {
    let u = (std::f64::consts::LN_10 * beta * (t - x)).exp();
    guess + (1.0 - guess - lapse) * (-(-u).exp_m1())
}

/// Probability that the majority of three independent responses with
/// per-response probability `p` is correct.
#[inline]
pub fn majority_of_three(p: f64) -> f64 {
    p * p * (3.0 - 2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf() -> PsychometricFunction {
        PsychometricFunction::with_threshold_ppd(60.0).unwrap()
    }

    #[test]
    fn asymptotes() {
        let pf = pf();
        assert!((pf.p_correct(1e-9) - 0.98).abs() < 1e-6);
        assert!((pf.p_correct(1e6) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn value_at_threshold() {
        let pf = pf();
        let closed = 0.5 + 0.48 * (1.0 - (-1.0f64).exp());
        assert!((pf.p_correct(30.0) - closed).abs() < 1e-12);
        assert!((pf.p_at_threshold() - 0.80342).abs() < 1e-4);
    }

    #[test]
    fn decreasing_and_bounded() {
        let pf = pf();
        let mut prev = f64::INFINITY;
        for i in 1..2000 {
            let p = pf.p_correct(i as f64 * 0.05);
            assert!(p <= prev && (0.5..=0.98).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn translation_invariance() {
        let pf = pf();
        let shifted = PsychometricFunction {
            threshold_t: pf.threshold_t + 0.3,
            ..pf
        };
        for x in [1.0, 2.5, 3.1, 3.4, 4.0] {
            assert!((shifted.p_at(x) - pf.p_at(x - 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(PsychometricFunction::new(3.0, 3.5, 0.6, 0.5).is_err());
        assert!(PsychometricFunction::new(3.0, 0.0, 0.5, 0.02).is_err());
        assert!(PsychometricFunction::new(3.0, 3.5, -0.1, 0.02).is_err());
    }

    #[test]
    fn majority_rule() {
        assert_eq!(majority_of_three(0.5), 0.5);
        assert_eq!(majority_of_three(1.0), 1.0);
        assert!((majority_of_three(0.8) - 0.896).abs() < 1e-12);
    }
}
