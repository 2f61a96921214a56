use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::units::{center_ppd, distance_for_ppd, DisplayGeometry};

/// Moving-display rig: a display on a rail plus integer pixel subsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub rail_min_m: f64,
    pub rail_max_m: f64,
    pub display: DisplayGeometry,
    pub allowed_factors: Vec<u32>,
    pub current_distance_m: f64,
}

impl PlannerConfig {
    /// 27" 4K display on a 1.1-2.7 m rail with 1x-4x subsampling.
    pub fn reference(current_distance_m: f64) -> Result<Self> {
        let cfg = PlannerConfig {
            rail_min_m: 1.1,
            rail_max_m: 2.7,
            display: DisplayGeometry::reference_27in_4k(current_distance_m)?,
            allowed_factors: vec![1, 2, 3, 4],
            current_distance_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rail_min_m > 0.0 && self.rail_min_m < self.rail_max_m) {
            return Err(domain("rail limits must satisfy 0 < min < max"));
        }
        if self.allowed_factors.is_empty() || self.allowed_factors.contains(&0) {
            return Err(domain("subsampling factors must be integers >= 1"));
        }
        if !(self.current_distance_m > 0.0) {
            return Err(domain("current distance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanOption {
    pub factor: u32,
    pub distance_m: f64,
    /// Signed travel: negative moves the display towards the observer.
    pub movement_m: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovementPlan {
    pub factor: u32,
    pub distance_m: f64,
    pub movement_m: f64,
    /// Every considered factor, feasible or not, in ascending factor order.
    pub options: Vec<PlanOption>,
}

impl MovementPlan {
    pub fn option(&self, factor: u32) -> Option<&PlanOption> {
        self.options.iter().find(|o| o.factor == factor)
    }
}

/// Chooses the subsampling factor and distance that show `target_ppd` with
/// the least display travel. Ties go to the smaller factor.
pub fn plan_movement(cfg: &PlannerConfig, target_ppd: f64) -> Result<MovementPlan> {
    cfg.validate()?;
    if !(target_ppd > 0.0 && target_ppd.is_finite()) {
        return Err(domain(format!("target ppd must be positive, got {target_ppd}")));
    }
    let mut factors = cfg.allowed_factors.clone();
    factors.sort_unstable();
    factors.dedup();

    let pitch = cfg.display.pixel_pitch_m();
    let options: Vec<PlanOption> = factors
        .iter()
        .map(|&k| {
            // subsampling by k multiplies the effective pitch by k
            let d = distance_for_ppd(pitch, k as f64 * target_ppd);
            PlanOption {
                factor: k,
                distance_m: d,
                movement_m: d - cfg.current_distance_m,
                feasible: d >= cfg.rail_min_m && d <= cfg.rail_max_m,
            }
        })
        .collect();

    let best = options
        .iter()
        .filter(|o| o.feasible)
        .min_by(|a, b| {
            a.movement_m
                .abs()
                .total_cmp(&b.movement_m.abs())
                .then(a.factor.cmp(&b.factor))
        })
        .copied();

    match best {
        Some(o) => Ok(MovementPlan {
            factor: o.factor,
            distance_m: o.distance_m,
            movement_m: o.movement_m,
            options,
        }),
        None => Err(Error::TargetOutOfRange {
            target_ppd,
            required: options.iter().map(|o| (o.factor, o.distance_m)).collect(),
        }),
    }
}

/// Effective resolution with subsampling factor `k` at `distance_m`.
pub fn effective_ppd(display: &DisplayGeometry, distance_m: f64, k: u32) -> f64 {
    center_ppd(&display.with_distance(distance_m)) / k as f64
}
