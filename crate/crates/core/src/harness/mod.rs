//! Trial lifecycle, batch experiments and log replay.

pub mod experiment;
pub mod phase;
pub mod replay;
pub mod trial;

use thiserror::Error;

use crate::agents::AgentError;
use crate::log::LogError;
use crate::metrics::MetricsError;
use crate::world::WorldError;

pub use experiment::{run_experiment, write_reports, ExperimentContext, ExperimentOutput, ExperimentPlan, PlannedTrial};
pub use phase::{PhaseMachine, TrialPhase};
pub use replay::{replay, ReplayError, Replayer};
pub use trial::{run_scripted_trial, run_trial, TickReport, TrialRunner, TrialSetup};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("physics diverged at t = {t:.3} s (tick {tick}): {detail}")]
    Divergence { tick: u64, t: f64, detail: String },
}

impl HarnessError {
    /// Process exit status for this error: 1 usage, 2 data, 3 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::World(_) | HarnessError::Agent(_) => 1,
            HarnessError::Divergence { .. } => 3,
            _ => 2,
        }
    }
}
