//! A full batch: every material toward every target, shuffled into blocks,
//! with a noisy scripted agent. Logs and reports go to the directory given
//! as the first argument (a temp directory by default).
//!
//! ```bash
//! cargo run --release -p bimanual-core --example experiment -- out/ 6
//! ```

use std::path::PathBuf;

use bimanual_core::agents::AgentProfile;
use bimanual_core::harness::{run_experiment, ExperimentContext, ExperimentPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bimanual-experiment"));
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);

    let plan = ExperimentPlan {
        reps_per_target: reps,
        seed: 7,
        familiarization: 2,
        ..Default::default()
    };
    let ctx = ExperimentContext {
        profile: AgentProfile {
            grip_setpoint: 5.0,
            noise_std: 0.3,
            ..Default::default()
        },
        ..Default::default()
    };

    let t0 = std::time::Instant::now();
    let result = run_experiment(&plan, &ctx, Some(&out))?;
    let ok = result.reports.iter().filter(|r| r.success).count();
    println!(
        "{} trials ({} warm-up) in {:.1} s, {} successful, written to {}",
        result.logs.len(),
        plan.familiarization,
        t0.elapsed().as_secs_f64(),
        ok,
        out.display()
    );

    println!("\n{:<5} {:<4} {:<6} {:<15} {:>9} {:>8} {:>3}", "mat", "tgt", "hand", "metric", "mean", "se", "n");
    for row in &result.summary {
        if !matches!(row.metric.as_str(), "mean_force" | "max_failure" | "dsi") {
            continue;
        }
        let se = row.se.map_or("-".to_string(), |s| format!("{s:.3}"));
        println!(
            "{:<5} {:<4} {:<6} {:<15} {:>9.3} {:>8} {:>3}",
            row.material, row.target, row.hand, row.metric, row.mean, se, row.n
        );
    }
    Ok(())
}
