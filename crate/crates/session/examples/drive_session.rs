//! Drive a live session over the socket with the scripted agent, the way a
//! browser client would. Without an address an in-process server is started
//! on a free port (also when the address is `-`).
//!
//! ```bash
//! cargo run -p bimanual-session --bin bimanual -- serve --port 8080 &
//! cargo run -p bimanual-session --example drive_session -- 127.0.0.1:8080 LSHB R
//! ```

use futures_util::{SinkExt, StreamExt};
use tokio_tungstenite::connect_async;
use tokio_tungstenite::tungstenite::Message;

use bimanual_core::agents::{run_trial_policy, AgentProfile, CommandSource, Observation};
use bimanual_core::harness::TrialSetup;
use bimanual_core::log::Cue;
use bimanual_core::world::{Material, MaterialId, SceneConfig, TargetLabel, Vec3};
use bimanual_session::protocol::{Action, ClientCommand, ServerMessage, PROTOCOL_VERSION};
use bimanual_session::SessionOptions;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let addr = args.next().filter(|a| !a.is_empty() && a != "-");
    let material: MaterialId = args.next().map(|s| s.parse()).transpose()?.unwrap_or(MaterialId::HSHB);
    let target: TargetLabel = args.next().map(|s| s.parse()).transpose()?.unwrap_or(TargetLabel::C);

    let addr = match addr {
        Some(a) => a,
        None => {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
            let addr = listener.local_addr()?.to_string();
            tokio::spawn(bimanual_session::server::serve(
                listener,
                SessionOptions::default(),
                None,
                std::future::pending(),
            ));
            addr
        }
    };
    let (mut ws, _) = connect_async(format!("ws://{addr}/session")).await?;

    let setup = TrialSetup::new(SceneConfig::default(), Material::lookup(material), target);
    let cube = setup.initial_cube();
    let mut agent = run_trial_policy(&AgentProfile::default(), &setup.scene, &setup.material, target, &cube)?;
    let mut action = Action::SelectTarget(target);
    let mut pending = [Action::SelectMaterial(material)].into_iter();
    let mut last_phase = None;

    while let Some(msg) = ws.next().await {
        let Message::Text(text) = msg? else { continue };
        let frame = match serde_json::from_str(text.as_str())? {
            ServerMessage::State { frame, .. } => frame,
            ServerMessage::Hello { role, .. } => {
                println!("connected as {role:?}");
                continue;
            }
            other => {
                println!("{other:?}");
                continue;
            }
        };
        if last_phase != Some(frame.phase) || frame.cue != Cue::None {
            println!(
                "t={:>6.3} {:<5} {:<13} F=({:.2}, {:.2}) N {}",
                frame.trial_t,
                frame.material,
                frame.phase.as_str(),
                frame.left.lateral_force,
                frame.right.lateral_force,
                if frame.cue == Cue::None { "" } else { frame.cue.as_str() }
            );
            last_phase = Some(frame.phase);
        }
        if frame.phase.is_terminal() && frame.trial_t > 0.0 {
            break;
        }
        // Target and material selections go first; each one resets the trial.
        let ready = frame.material == material && frame.target == target;
        let obs = Observation {
            t: if ready { frame.trial_t } else { 0.0 },
            lateral_force: [frame.left.lateral_force, frame.right.lateral_force],
            cube_position: Vec3::from(frame.cube.position),
        };
        let cmd = agent.next_command(&obs)?;
        let msg = ClientCommand {
            v: PROTOCOL_VERSION,
            t_client: frame.t * 1e3,
            left_target: cmd.left_pos.into(),
            right_target: cmd.right_pos.into(),
            action,
        };
        action = if ready { Action::None } else { pending.next().unwrap_or(Action::None) };
        ws.send(Message::Text(serde_json::to_string(&msg)?.into())).await?;
    }
    ws.close(None).await?;
    Ok(())
}
