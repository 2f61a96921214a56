//! Simulation of the 2IFC measurement protocol.
//!
//! A [`PsychometricFunction`] stands in for the observer, a [`QuestState`]
//! chooses each resolution, and [`run_session`] ties them together with the
//! three-repeat presentation rule. [`plan_movement`] picks the subsampling
//! factor and display distance that realise a requested resolution with the
//! least travel on the rail.

mod planner;
mod quest;
mod session;
mod weibull;

pub use planner::{effective_ppd, plan_movement, MovementPlan, PlanOption, PlannerConfig};
pub use quest::{should_stop, Prior, QuestConfig, QuestState, RepeatRule};
pub use session::{run_session, SessionLabels, SessionResult, SessionSummary};
pub use weibull::{majority_of_three, PsychometricFunction, DEFAULT_GUESS, DEFAULT_LAPSE, DEFAULT_SLOPE};
