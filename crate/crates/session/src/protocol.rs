//! Wire messages of the `/session` socket. Every message is one JSON text
//! frame carrying the schema version in `v`. See `PROTOCOL.md` at the crate
//! root for examples.

use serde::{Deserialize, Serialize};

use bimanual_core::log::Cue;
use bimanual_core::world::{Material, MaterialId, RoomBounds, TargetLabel};
use bimanual_core::TrialPhase;

pub const PROTOCOL_VERSION: u32 = 1;

/// What the driver wants besides moving the hands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    #[default]
    None,
    ResetTrial,
    SelectMaterial(MaterialId),
    SelectTarget(TargetLabel),
}

/// Client to server. Targets are VR-frame positions in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientCommand {
    pub v: u32,
    /// Client clock, ms. Only echoed back for latency measurement.
    pub t_client: f64,
    pub left_target: [f64; 3],
    pub right_target: [f64; 3],
    #[serde(default)]
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Driver,
    Spectator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeFrame {
    pub position: [f64; 3],
    pub width: f64,
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandFrame {
    pub ee: [f64; 3],
    pub god_object: [f64; 3],
    /// Lateral (grip) force magnitude, N.
    pub lateral_force: f64,
    pub force: [f64; 3],
    /// Visual squash of the hand sphere along the grip axis, 1 when free.
    pub flatten: f64,
    /// Visual bulge across the grip axis, 1 when free.
    pub widen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    /// Session clock, s. Never decreases.
    pub t: f64,
    /// Time since the current trial started, s.
    pub trial_t: f64,
    /// Physics ticks run in the current trial.
    pub tick: u64,
    pub trial: usize,
    pub material: MaterialId,
    pub target: TargetLabel,
    pub phase: TrialPhase,
    pub cube: CubeFrame,
    pub left: HandFrame,
    pub right: HandFrame,
    /// Set on exactly one frame per cue.
    pub cue: Cue,
    /// `t_client` of the newest command applied so far.
    pub last_t_client: Option<f64>,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        v: u32,
        role: Role,
        frame_rate_hz: f64,
        room: RoomBounds,
        materials: Vec<Material>,
    },
    State {
        v: u32,
        #[serde(flatten)]
        frame: StateFrame,
    },
    Warning {
        v: u32,
        message: String,
    },
    Error {
        v: u32,
        message: String,
    },
}

impl ServerMessage {
    pub fn state(frame: StateFrame) -> Self {
        ServerMessage::State {
            v: PROTOCOL_VERSION,
            frame,
        }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        ServerMessage::Warning {
            v: PROTOCOL_VERSION,
            message: message.into(),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error {
            v: PROTOCOL_VERSION,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// Parse one inbound text frame.
pub fn parse_command(text: &str) -> Result<ClientCommand, String> {
    let cmd: ClientCommand = serde_json::from_str(text).map_err(|e| format!("malformed command: {e}"))?;
    if cmd.v != PROTOCOL_VERSION {
        return Err(format!("unsupported protocol version {} (expected {PROTOCOL_VERSION})", cmd.v));
    }
    Ok(cmd)
}
