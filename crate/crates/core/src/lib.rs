//! Deterministic simulator of two-handed manipulation of a virtual cube
//! under god-object haptic rendering, with the analysis pipeline for
//! coordination and grip metrics.
//!
//! The pieces, bottom up:
//!
//! * [`world`]: materials, cube and hand state, scene layout.
//! * [`haptics`]: the 1 kHz contact and cube dynamics step.
//! * [`kinematics`]: 4-DoF arm model, Jacobian and joint torques.
//! * [`agents`]: scripted controllers that drive both hands.
//! * [`harness`]: trial phases, batch experiments, replay.
//! * [`log`]: the on-disk trial format.
//! * [`metrics`]: filtering and per-trial / per-condition statistics.

pub mod agents;
pub mod config;
pub mod haptics;
pub mod harness;
pub mod kinematics;
pub mod log;
pub mod metrics;
pub mod world;

pub use config::Config;
pub use harness::{HarnessError, TrialPhase};
pub use log::TrialLog;
pub use world::{Material, MaterialId, Side, TargetLabel, Vec3};
