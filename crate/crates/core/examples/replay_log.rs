//! Play a recorded trial back on the wall clock. Pass a trial CSV to replay
//! it; without one (or with `-`) a fresh trial is recorded first. The second argument is
//! the playback speed.
//!
//! ```bash
//! cargo run -p bimanual-core --example replay_log -- trials/0000_HSHB_C.csv 4
//! ```

use std::path::PathBuf;

use bimanual_core::agents::AgentProfile;
use bimanual_core::harness::{run_scripted_trial, Replayer, TrialSetup};
use bimanual_core::log::Cue;
use bimanual_core::world::{Material, MaterialId, SceneConfig, TargetLabel};
use bimanual_core::TrialLog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let log = match args.next().filter(|a| a != "-") {
        Some(path) => TrialLog::read(&PathBuf::from(path))?,
        None => {
            let setup = TrialSetup::new(SceneConfig::default(), Material::lookup(MaterialId::HSHB), TargetLabel::L);
            run_scripted_trial(setup, &AgentProfile::default())?
        }
    };
    let speed: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8.0);

    let player = Replayer::new(&log, speed)?;
    println!("{} rows, {:.2} s at {speed}x", log.len(), player.duration().as_secs_f64());
    let mut last_phase = None;
    let sent = player.play(|row| {
        if last_phase != Some(row.phase) || row.event != Cue::None {
            println!(
                "t={:>6.3}  {:<13} cube=({:+.3}, {:.3}, {:+.3}) {}",
                row.t,
                row.phase.as_str(),
                row.cube.x,
                row.cube.y,
                row.cube.z,
                if row.event == Cue::None { "" } else { row.event.as_str() }
            );
            last_phase = Some(row.phase);
        }
        true
    });
    println!("{sent} frames played");
    Ok(())
}
