//! Single-trial execution: physics at the haptic rate, logging at the log
//! rate, phase tracking and cue emission.

use nalgebra::Vector4;

use super::phase::{PhaseInputs, PhaseMachine, TrialPhase};
use super::HarnessError;
use crate::agents::{run_trial_policy, AgentProfile, CommandSource, Observation};
use crate::haptics::{grip_is_valid, step, EeForce, FailureEvent, FailureKind, PhysicsParams, PhysicsState, StepOutput};
use crate::kinematics::{inverse_kinematics, ready_posture, torques_from_force, ArmModel, JointState, DEFAULT_SHOULDER_SEPARATION};
use crate::log::{Cue, CueRecord, LogRow, TorqueSummary, TrialLog, TrialMeta, LOG_RATE_HZ, META_VERSION};
use crate::world::{vr_to_robot, CubeState, Material, SceneConfig, Side, TargetLabel, Vec3};

/// IK iterations per physics tick. The solve is warm-started from the
/// previous tick, so a couple of steps keep up with hand motion.
const IK_ITERATIONS: usize = 2;

#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub scene: SceneConfig,
    pub material: Material,
    pub target: TargetLabel,
    pub params: PhysicsParams,
    pub arms: [ArmModel; 2],
    pub trial_index: usize,
    pub seed: u64,
    pub familiarization: bool,
    /// Simulated time after which an unfinished trial is cut off, s.
    pub max_duration: f64,
    /// Time the cube keeps falling after a slip before the trial ends, s.
    pub slip_tail: f64,
    /// Track joint torques of both arms while the trial runs.
    pub torques: bool,
}

impl TrialSetup {
    pub fn new(scene: SceneConfig, material: Material, target: TargetLabel) -> Self {
        Self {
            scene,
            material,
            target,
            params: PhysicsParams::default(),
            arms: [
                ArmModel::for_side(Side::Left, DEFAULT_SHOULDER_SEPARATION),
                ArmModel::for_side(Side::Right, DEFAULT_SHOULDER_SEPARATION),
            ],
            trial_index: 0,
            seed: 0,
            familiarization: false,
            max_duration: 20.0,
            slip_tail: 0.5,
            torques: true,
        }
    }

    /// The cube at rest on the start point.
    pub fn initial_cube(&self) -> CubeState {
        self.params.resting_cube(&self.scene.start_point, self.scene.cube_width)
    }

    fn ticks_per_row(&self) -> u64 {
        ((1.0 / (self.params.dt * LOG_RATE_HZ)).round() as u64).max(1)
    }
}

/// Outcome of one physics tick.
#[derive(Debug, Clone)]
pub struct TickReport {
    pub t: f64,
    pub phase: TrialPhase,
    pub output: StepOutput,
    /// Cue emitted on this tick, if any.
    pub cue: Option<Cue>,
    /// The applied hand targets after clamping to the room.
    pub applied: [Vec3; 2],
    pub clamped: bool,
}

/// Steps one trial tick by tick. Used directly by live sessions; batch runs
/// go through [`run_trial`].
#[derive(Debug, Clone)]
pub struct TrialRunner {
    setup: TrialSetup,
    state: PhysicsState,
    last_forces: [EeForce; 2],
    machine: PhaseMachine,
    start: Vec3,
    rest_height: f64,
    rows: Vec<LogRow>,
    pending_cue: Cue,
    cues: Vec<CueRecord>,
    failures: Vec<FailureEvent>,
    terminal_tick: Option<u64>,
    finished: bool,
    incomplete: bool,
    q: [Vector4<f64>; 2],
    torques: TorqueSummary,
}

impl TrialRunner {
    pub fn new(setup: TrialSetup, cube: CubeState, hands: [Vec3; 2]) -> Result<Self, HarnessError> {
        setup.params.validate().map_err(HarnessError::Usage)?;
        if !(setup.max_duration > 0.0 && setup.slip_tail >= 0.0) {
            return Err(HarnessError::Usage("duration and slip tail must be positive".into()));
        }
        for arm in &setup.arms {
            arm.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        }
        let room = &setup.scene.room_bounds;
        let hands = hands.map(|h| room.clamp(&h));
        let start = cube.position;
        let rest_height = setup.scene.start_point.y + setup.params.rest_height(cube.width0, cube.mass);
        let state = PhysicsState::new(cube, hands[0], hands[1]);
        let mut runner = Self {
            setup,
            state,
            last_forces: [EeForce::zero(), EeForce::zero()],
            machine: PhaseMachine::default(),
            start,
            rest_height,
            rows: Vec::new(),
            pending_cue: Cue::None,
            cues: Vec::new(),
            failures: Vec::new(),
            terminal_tick: None,
            finished: false,
            incomplete: false,
            q: [ready_posture(); 2],
            torques: TorqueSummary::default(),
        };
        if runner.setup.torques {
            for side in Side::BOTH {
                runner.solve_arm(side, &hands[side.index()], 50);
            }
        }
        runner.push_row();
        Ok(runner)
    }

    pub fn setup(&self) -> &TrialSetup {
        &self.setup
    }

    pub fn state(&self) -> &PhysicsState {
        &self.state
    }

    pub fn phase(&self) -> TrialPhase {
        self.machine.phase()
    }

    pub fn forces(&self) -> &[EeForce; 2] {
        &self.last_forces
    }

    pub fn time(&self) -> f64 {
        self.state.time(self.setup.params.dt)
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    /// Latest joint configuration of each arm (robot frame).
    pub fn joint_angles(&self) -> &[Vector4<f64>; 2] {
        &self.q
    }

    pub fn observation(&self) -> Observation {
        Observation {
            t: self.time(),
            lateral_force: [self.last_forces[0].lateral(), self.last_forces[1].lateral()],
            cube_position: self.state.cube.position,
        }
    }

    fn push_row(&mut self) {
        let s = &self.state;
        let event = std::mem::replace(&mut self.pending_cue, Cue::None);
        self.rows.push(LogRow {
            t: s.time(self.setup.params.dt),
            ee: [s.ee[0].position, s.ee[1].position],
            force: [self.last_forces[0].f, self.last_forces[1].f],
            go: [s.god_objects[0].position, s.god_objects[1].position],
            cube: s.cube.position,
            phase: self.machine.phase(),
            event,
        });
    }

    fn solve_arm(&mut self, side: Side, hand_vr: &Vec3, iterations: usize) -> Option<JointState> {
        let i = side.index();
        let arm = &self.setup.arms[i];
        let target = vr_to_robot(hand_vr, &self.setup.scene).ok()?;
        self.q[i] = inverse_kinematics(arm, &target, &self.q[i], iterations);
        Some(JointState::at(self.q[i]))
    }

    fn track_torques(&mut self) {
        for side in Side::BOTH {
            let i = side.index();
            let hand = self.state.ee[i].position;
            let Some(q) = self.solve_arm(side, &hand, IK_ITERATIONS) else { continue };
            let Ok(tau) = torques_from_force(&self.setup.arms[i], &q, &self.last_forces[i].f) else { continue };
            for j in 0..4 {
                let peak = &mut self.torques.peak_abs[i][j];
                *peak = peak.max(tau.raw[j].abs());
                if tau.saturated[j] {
                    self.torques.saturated_ticks[i][j] += 1;
                }
            }
        }
    }

    /// Advance one physics tick with the hands commanded to `targets`.
    pub fn tick(&mut self, targets: [Vec3; 2]) -> Result<TickReport, HarnessError> {
        let room = &self.setup.scene.room_bounds;
        let mut applied = targets;
        let mut clamped = false;
        for p in applied.iter_mut() {
            let c = room.clamp(p);
            clamped |= c != *p;
            *p = c;
        }
        if applied.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(HarnessError::Usage("non-finite hand command".into()));
        }

        let before = self.machine.phase();
        let (next, out) = step(&self.state, &applied, &self.setup.material, room, &self.setup.params);
        if !next.is_finite() {
            return Err(HarnessError::Divergence {
                tick: next.tick,
                t: next.time(self.setup.params.dt),
                detail: format!("cube at {:?}", next.cube.position.as_slice()),
            });
        }
        self.state = next;
        self.last_forces = out.forces.clone();

        let gripped = grip_is_valid(&out.forces[0], &out.forces[1], &self.setup.material);
        let contacts = [out.god_objects[0].in_contact, out.god_objects[1].in_contact];
        let target = self.setup.scene.target(self.setup.target).clone();
        let phase = if before.is_terminal() {
            before
        } else {
            self.machine.update(&PhaseInputs {
                any_contact: contacts[0] || contacts[1],
                gripped,
                rest_height: self.rest_height,
                cube: &out.cube,
                start: &self.start,
                target: &target,
                event: &out.event,
            })
        };

        let t = self.time();
        let mut cue = None;
        if phase != before && phase.is_terminal() {
            let c = match phase {
                TrialPhase::Done => Cue::Placed,
                TrialPhase::FailedBreak => Cue::Broke,
                _ => Cue::Slipped,
            };
            if matches!(out.event.kind, FailureKind::Break | FailureKind::Slip) {
                self.failures.push(out.event.clone());
            }
            self.cues.push(CueRecord { cue: c, t });
            self.pending_cue = c;
            self.terminal_tick = Some(self.state.tick);
            cue = Some(c);
        }

        if self.setup.torques {
            self.track_torques();
        }

        let per_row = self.setup.ticks_per_row();
        if self.state.tick % per_row == 0 {
            self.push_row();
            let tail = match (phase, self.terminal_tick) {
                (TrialPhase::FailedSlip, Some(t0)) => (self.setup.slip_tail / self.setup.params.dt).round() as u64 + t0,
                (_, Some(t0)) => t0,
                (_, None) => u64::MAX,
            };
            let timed_out = t >= self.setup.max_duration;
            if self.state.tick >= tail || timed_out {
                self.finished = true;
            }
        }

        Ok(TickReport {
            t,
            phase,
            output: out,
            cue,
            applied,
            clamped,
        })
    }

    /// End the trial early because the input source went away.
    pub fn abort(&mut self) {
        self.incomplete = true;
        self.finished = true;
    }

    pub fn finish(self) -> TrialLog {
        let final_phase = self.machine.phase();
        TrialLog {
            meta: TrialMeta {
                version: META_VERSION,
                trial_index: self.setup.trial_index,
                material: self.setup.material.clone(),
                target: self.setup.target,
                seed: self.setup.seed,
                success: final_phase == TrialPhase::Done && !self.incomplete,
                incomplete: self.incomplete,
                familiarization: self.setup.familiarization,
                dt_log: 1.0 / LOG_RATE_HZ,
                dt_physics: self.setup.params.dt,
                width0: self.state.cube.width0,
                final_phase,
                cues: self.cues,
                failures: self.failures,
                torques: self.setup.torques.then_some(self.torques),
            },
            rows: self.rows,
        }
    }
}

/// Run a trial driven by `source` until it finishes, times out or the
/// source disconnects. A disconnected or timed-out source yields an
/// incomplete log rather than an error.
pub fn run_trial(
    setup: TrialSetup,
    cube: CubeState,
    hands: [Vec3; 2],
    source: &mut dyn CommandSource,
) -> Result<TrialLog, HarnessError> {
    let mut runner = TrialRunner::new(setup, cube, hands)?;
    while !runner.is_finished() {
        match source.next_command(&runner.observation()) {
            Ok(cmd) => {
                runner.tick(cmd.positions())?;
            }
            Err(_) => runner.abort(),
        }
    }
    Ok(runner.finish())
}

/// Run one trial with the scripted agent from the standard start pose.
pub fn run_scripted_trial(setup: TrialSetup, profile: &AgentProfile) -> Result<TrialLog, HarnessError> {
    let cube = setup.initial_cube();
    let mut agent = run_trial_policy(profile, &setup.scene, &setup.material, setup.target, &cube)?;
    let hands = agent.initial_positions();
    run_trial(setup, cube, hands, &mut agent)
}
