//! Run one scripted trial per material toward each target and print the
//! outcome and headline metrics.
//!
//! ```bash
//! cargo run -p bimanual-core --example scripted_trial
//! cargo run -p bimanual-core --example scripted_trial -- 6.0   # grip setpoint, N
//! ```

use bimanual_core::agents::AgentProfile;
use bimanual_core::harness::{run_scripted_trial, TrialSetup};
use bimanual_core::metrics::analyze;
use bimanual_core::world::{Material, MaterialId, SceneConfig, TargetLabel};

fn main() {
    let setpoint: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("setpoint must be a number"))
        .unwrap_or(AgentProfile::default().grip_setpoint);
    let profile = AgentProfile {
        grip_setpoint: setpoint,
        ..Default::default()
    };
    let scene = SceneConfig::default();

    println!("setpoint {setpoint} N");
    println!("{:<5} {:<3} {:<13} {:>7} {:>8} {:>7} {:>7} {:>7} {:>7}", "mat", "tgt", "phase", "t_exec", "defl_mm", "dsi", "nj_l", "nj_r", "fpb");
    for id in MaterialId::ALL {
        for target in TargetLabel::ALL {
            let setup = TrialSetup::new(scene.clone(), Material::lookup(id), target);
            let log = run_scripted_trial(setup, &profile).expect("trial runs");
            let r = analyze(&log);
            let show = |v: Option<f64>, k: f64| v.map_or("-".to_string(), |v| format!("{:.2}", v * k));
            println!(
                "{:<5} {:<3} {:<13} {:>7} {:>8} {:>7} {:>7} {:>7} {:>7}",
                id.as_str(),
                target.as_str(),
                log.meta.final_phase.as_str(),
                show(r.execution_time, 1.0),
                show(r.deflection_mean, 1e3),
                show(r.dsi_mean, 1.0),
                show(r.nj_left, 1.0),
                show(r.nj_right, 1.0),
                show(r.fpb, 1.0),
            );
        }
    }
}
