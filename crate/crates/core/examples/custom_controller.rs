//! Drive a trial with a hand-written controller instead of the scripted
//! agent. This one closes both hands at constant speed until it feels the
//! grip, then lifts straight up. It never sets the cube down, so the trial
//! runs into the timeout and the log shows where it got stuck.

use bimanual_core::agents::{CommandSource, EeCommand, Observation, SourceError};
use bimanual_core::harness::{run_trial, TrialSetup};
use bimanual_core::world::{Material, MaterialId, SceneConfig, TargetLabel, Vec3};

struct SqueezeAndLift {
    left: Vec3,
    right: Vec3,
    grip: f64,
    gripped_at: Option<f64>,
}

impl CommandSource for SqueezeAndLift {
    fn next_command(&mut self, obs: &Observation) -> Result<EeCommand, SourceError> {
        let dt = 1e-3;
        let squeeze = obs.lateral_force[0].min(obs.lateral_force[1]);
        if squeeze < self.grip {
            self.left.x += 0.03 * dt;
            self.right.x -= 0.03 * dt;
        } else {
            self.gripped_at.get_or_insert(obs.t);
            self.left.y += 0.05 * dt;
            self.right.y += 0.05 * dt;
        }
        let lift_limit = 0.35;
        self.left.y = self.left.y.min(lift_limit);
        self.right.y = self.right.y.min(lift_limit);
        Ok(EeCommand {
            t: obs.t,
            left_pos: self.left,
            right_pos: self.right,
        })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut setup = TrialSetup::new(SceneConfig::default(), Material::lookup(MaterialId::HSHB), TargetLabel::C);
    setup.max_duration = 6.0;
    let cube = setup.initial_cube();
    let h = cube.half_width() + 0.02;
    let hands = [cube.position - Vec3::new(h, 0.0, 0.0), cube.position + Vec3::new(h, 0.0, 0.0)];
    let mut ctl = SqueezeAndLift {
        left: hands[0],
        right: hands[1],
        grip: 4.0,
        gripped_at: None,
    };
    let log = run_trial(setup, cube, hands, &mut ctl)?;
    let last = log.rows.last().expect("at least the initial row");
    println!("gripped at {:?} s", ctl.gripped_at);
    println!("final phase {} at t = {:.2} s, cube height {:.3} m", last.phase.as_str(), last.t, last.cube.y);
    Ok(())
}
