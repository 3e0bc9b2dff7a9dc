//! Record one trial to disk, load it back and run the analysis pipeline on
//! the loaded copy: filtering, deflection, directional symmetry, normalized
//! jerk and the time-normalized grip force profile.

use bimanual_core::agents::{AgentProfile, LeadHand};
use bimanual_core::harness::{run_scripted_trial, TrialSetup};
use bimanual_core::metrics::{self, analyze};
use bimanual_core::world::{Material, MaterialId, SceneConfig, Side, TargetLabel};
use bimanual_core::TrialLog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let setup = TrialSetup::new(SceneConfig::default(), Material::lookup(MaterialId::MSHB), TargetLabel::R);
    let profile = AgentProfile {
        lead_hand: LeadHand::Right,
        lead_gain: 0.2,
        ..Default::default()
    };
    let log = run_scripted_trial(setup, &profile)?;

    let dir = std::env::temp_dir().join("bimanual-metrics-example");
    let csv = log.write_to_dir(&dir)?;
    let loaded = TrialLog::read(&csv)?;
    println!("wrote {} rows to {}", loaded.len(), csv.display());

    let report = analyze(&loaded);
    println!("success          {}", report.success);
    println!("execution time   {:.3} s", report.execution_time.unwrap_or(f64::NAN));
    println!("deflection       {:.2} mm", 1e3 * report.deflection_mean.unwrap_or(f64::NAN));
    println!("DSI mean         {:+.2} % (right hand leads)", report.dsi_mean.unwrap_or(f64::NAN));
    println!(
        "NJ left / right  {:.0} / {:.0}",
        report.nj_left.unwrap_or(f64::NAN),
        report.nj_right.unwrap_or(f64::NAN)
    );

    let profile = metrics::force_profile(&loaded)?;
    println!("\n% movement   F_left N   F_right N");
    for pct in (0..metrics::PROFILE_POINTS).step_by(10) {
        println!(
            "{pct:>10} {:>10.3} {:>11.3}",
            profile.hand(Side::Left)[pct],
            profile.hand(Side::Right)[pct]
        );
    }
    Ok(())
}
