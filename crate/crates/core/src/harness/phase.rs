use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::haptics::{FailureEvent, FailureKind};
use crate::world::{CubeState, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialPhase {
    Idle,
    Approach,
    Grab,
    Lift,
    Transport,
    Place,
    Done,
    FailedBreak,
    FailedSlip,
}

impl TrialPhase {
    pub const ALL: [TrialPhase; 9] = [
        TrialPhase::Idle,
        TrialPhase::Approach,
        TrialPhase::Grab,
        TrialPhase::Lift,
        TrialPhase::Transport,
        TrialPhase::Place,
        TrialPhase::Done,
        TrialPhase::FailedBreak,
        TrialPhase::FailedSlip,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrialPhase::Idle => "idle",
            TrialPhase::Approach => "approach",
            TrialPhase::Grab => "grab",
            TrialPhase::Lift => "lift",
            TrialPhase::Transport => "transport",
            TrialPhase::Place => "place",
            TrialPhase::Done => "done",
            TrialPhase::FailedBreak => "failed_break",
            TrialPhase::FailedSlip => "failed_slip",
        }
    }

    /// Phases during which the hands hold the object.
    pub fn is_in_grip(self) -> bool {
        matches!(
            self,
            TrialPhase::Grab | TrialPhase::Lift | TrialPhase::Transport | TrialPhase::Place
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TrialPhase::Done | TrialPhase::FailedBreak | TrialPhase::FailedSlip)
    }

    pub fn can_transition(self, to: TrialPhase) -> bool {
        use TrialPhase::*;
        match (self, to) {
            (Idle, Approach) | (Approach, Grab) | (Grab, Lift) | (Lift, Transport) | (Transport, Place) | (Place, Done) => true,
            (from, FailedBreak | FailedSlip) => from.is_in_grip(),
            (FailedBreak | FailedSlip, Idle) => true,
            _ => false,
        }
    }
}

impl fmt::Display for TrialPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialPhase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrialPhase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

/// Horizontal distance the cube must travel before lift counts as transport, m.
pub const TRANSPORT_ONSET: f64 = 0.01;
/// Height above its floor rest height within which a cube counts as set down, m.
pub const REST_CLEARANCE: f64 = 1e-3;
/// Speed below which a set-down cube counts as at rest, m/s.
pub const REST_SPEED: f64 = 2e-3;

/// What the phase machine sees on one tick.
pub struct PhaseInputs<'a> {
    pub any_contact: bool,
    pub gripped: bool,
    /// Center height of the cube when resting on the floor.
    pub rest_height: f64,
    pub cube: &'a CubeState,
    pub start: &'a nalgebra::Vector3<f64>,
    pub target: &'a Target,
    pub event: &'a FailureEvent,
}

/// Observational trial phase tracker. Transitions are driven purely by the
/// physical state, so live and scripted input share it.
#[derive(Debug, Clone)]
pub struct PhaseMachine {
    phase: TrialPhase,
}

impl Default for PhaseMachine {
    fn default() -> Self {
        Self {
            phase: TrialPhase::Idle,
        }
    }
}

impl PhaseMachine {
    pub fn phase(&self) -> TrialPhase {
        self.phase
    }

    fn go(&mut self, to: TrialPhase) {
        debug_assert!(self.phase.can_transition(to), "{} -> {}", self.phase, to);
        self.phase = to;
    }

    /// Back to `Idle` after a failure, for a new trial.
    pub fn reset(&mut self) {
        self.phase = TrialPhase::Idle;
    }

    /// Advance on one physics tick; returns the phase after the tick.
    pub fn update(&mut self, inp: &PhaseInputs<'_>) -> TrialPhase {
        use TrialPhase::*;
        if self.phase == Idle {
            self.go(Approach);
        }
        if self.phase == Approach && inp.any_contact {
            self.go(Grab);
        }
        if self.phase.is_in_grip() {
            match inp.event.kind {
                FailureKind::Break => {
                    self.go(FailedBreak);
                    return self.phase;
                }
                FailureKind::Slip => {
                    self.go(FailedSlip);
                    return self.phase;
                }
                FailureKind::None => {}
            }
        }
        let cube = inp.cube;
        if self.phase == Grab && inp.gripped && cube.held {
            self.go(Lift);
        }
        if self.phase == Lift {
            let moved = cube.position - inp.start;
            if cube.held && moved.x.hypot(moved.z) > TRANSPORT_ONSET {
                self.go(Transport);
            }
        }
        if self.phase == Transport && inp.target.covers(&cube.position) {
            self.go(Place);
        }
        if self.phase == Place
            && cube.position.y <= inp.rest_height + REST_CLEARANCE
            && cube.velocity.norm() < REST_SPEED
            && inp.target.covers(&cube.position)
        {
            self.go(Done);
        }
        self.phase
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legal_transitions() {
        use TrialPhase::*;
        let chain = [Idle, Approach, Grab, Lift, Transport, Place, Done];
        for w in chain.windows(2) {
            assert!(w[0].can_transition(w[1]));
        }
        assert!(!Approach.can_transition(Lift));
        assert!(!Grab.can_transition(Transport));
        assert!(!Approach.can_transition(FailedBreak));
        assert!(Transport.can_transition(FailedSlip));
        assert!(FailedBreak.can_transition(Idle));
        assert!(!Done.can_transition(Idle));
        for p in TrialPhase::ALL {
            assert_eq!(p.as_str().parse::<TrialPhase>().unwrap(), p);
        }
    }
}
