//! Scripted bimanual controllers.
//!
//! A [`ScriptedAgent`] runs a fixed stage schedule (approach, grip, lift,
//! transport, lower, release) and closes a per-hand integral loop on the
//! measured grip force. Hand asymmetry is kinematic: the leading hand's
//! vertical and forward displacement from its grab point is stretched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{CubeState, Material, SceneConfig, Side, TargetLabel, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("time {t} outside [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("target {0} is unreachable inside the room")]
    UnreachableTarget(TargetLabel),
    #[error("invalid agent profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("no command received within {0} s")]
    Timeout(f64),
    #[error("input source disconnected")]
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeadHand {
    Left,
    Right,
    Symmetric,
}

impl std::str::FromStr for LeadHand {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(LeadHand::Left),
            "right" => Ok(LeadHand::Right),
            "symmetric" | "none" => Ok(LeadHand::Symmetric),
            other => Err(AgentError::InvalidProfile(format!("unknown lead hand `{other}`"))),
        }
    }
}

/// Scripted faults for exercising the failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    None,
    /// The right hand lets go halfway through transport.
    ReleaseMidTransport,
}

/// Stage durations of the script, s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptTiming {
    pub approach: f64,
    pub grip: f64,
    pub lift: f64,
    pub transport: f64,
    pub lower: f64,
    pub release: f64,
}

impl Default for ScriptTiming {
    fn default() -> Self {
        Self {
            approach: 0.5,
            grip: 2.0,
            lift: 0.5,
            transport: 2.0,
            lower: 0.5,
            release: 0.01,
        }
    }
}

impl ScriptTiming {
    pub fn total(&self) -> f64 {
        self.until_placed() + self.release
    }

    /// Time from trial start until the cube is set down on the target.
    pub fn until_placed(&self) -> f64 {
        self.approach + self.grip + self.lift + self.transport + self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentProfile {
    /// Lateral force each hand regulates to, N.
    pub grip_setpoint: f64,
    /// Integral gain of the grip loop, m/(N·s).
    pub grip_gain: f64,
    pub lead_hand: LeadHand,
    /// Extra fractional displacement of the leading hand.
    pub lead_gain: f64,
    /// Standard deviation of the per-tick setpoint jitter, N.
    pub noise_std: f64,
    pub seed: u64,
    /// Height the cube is lifted before transport, m.
    pub lift_height: f64,
    pub timing: ScriptTiming,
    pub fault: Fault,
}

impl Default for AgentProfile {
    fn default() -> Self {
        Self {
            grip_setpoint: 4.0,
            grip_gain: 0.1,
            lead_hand: LeadHand::Symmetric,
            lead_gain: 0.0,
            noise_std: 0.0,
            seed: 0,
            lift_height: 0.10,
            timing: ScriptTiming::default(),
            fault: Fault::None,
        }
    }
}

impl AgentProfile {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidProfile(m.to_string()));
        if !(self.grip_gain > 0.0) {
            return bad("grip gain must be positive");
        }
        if !(self.lead_gain >= 0.0) {
            return bad("lead gain must be non-negative");
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise std must be non-negative");
        }
        if !(self.grip_setpoint > 0.0) {
            return bad("grip setpoint must be positive");
        }
        let t = &self.timing;
        if [t.approach, t.grip, t.lift, t.transport, t.lower, t.release]
            .iter()
            .any(|d| !(*d > 0.0))
        {
            return bad("stage durations must be positive");
        }
        Ok(())
    }

    /// Whether a successful hold is possible on `mat` with this setpoint:
    /// above the slip threshold, below the breaking force, and soft enough
    /// that the regulated penetration stays inside an object `width0` wide.
    pub fn setpoint_in_band(&self, mat: &Material, width0: f64) -> bool {
        let sp = self.grip_setpoint;
        sp > mat.f_contact_min && sp < mat.f_break && sp / mat.stiffness < width0
    }

    fn lead_factor(&self, side: Side) -> f64 {
        match (self.lead_hand, side) {
            (LeadHand::Left, Side::Left) | (LeadHand::Right, Side::Right) => 1.0 + self.lead_gain,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinJerkSample {
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
}

/// Minimum-jerk point-to-point profile from `p0` to `p1` over `duration`.
pub fn min_jerk(p0: &Vec3, p1: &Vec3, duration: f64, t: f64) -> Result<MinJerkSample, AgentError> {
    if !(duration > 0.0) {
        return Err(AgentError::NonPositiveDuration(duration));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(AgentError::TimeOutOfRange { t, duration });
    }
    let s = t / duration;
    let d = p1 - p0;
    let (s2, s3) = (s * s, s * s * s);
    let shape = 10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2;
    let dshape = (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / duration;
    let ddshape = (60.0 * s - 180.0 * s2 + 120.0 * s3) / (duration * duration);
    Ok(MinJerkSample {
        pos: p0 + d * shape,
        vel: d * dshape,
        acc: d * ddshape,
    })
}

/// Normalised min-jerk position shape, clamped outside `[0, 1]`.
fn mj_shape(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Integral grip controller: inward offset increment for one tick, m.
pub fn grip_regulator(measured_force: f64, setpoint: f64, gain: f64, dt: f64) -> f64 {
    gain * (setpoint - measured_force) * dt
}

/// Hand position commands at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeCommand {
    pub t: f64,
    pub left_pos: Vec3,
    pub right_pos: Vec3,
}

impl EeCommand {
    pub fn positions(&self) -> [Vec3; 2] {
        [self.left_pos, self.right_pos]
    }
}

/// What a controller may observe before issuing the next command.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    /// Lateral grip force magnitudes from the previous tick, N.
    pub lateral_force: [f64; 2],
    pub cube_position: Vec3,
}

/// Anything that can drive the two end-effectors.
pub trait CommandSource {
    fn next_command(&mut self, obs: &Observation) -> Result<EeCommand, SourceError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptStage {
    Approach,
    Grip,
    Lift,
    Transport,
    Lower,
    Release,
    Finished,
}

/// Start time of each stage plus the end of the script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub grip: f64,
    pub lift: f64,
    pub transport: f64,
    pub lower: f64,
    pub release: f64,
    pub end: f64,
}

impl Schedule {
    fn from_timing(t: &ScriptTiming) -> Self {
        let grip = t.approach;
        let lift = grip + t.grip;
        let transport = lift + t.lift;
        let lower = transport + t.transport;
        let release = lower + t.lower;
        Self {
            grip,
            lift,
            transport,
            lower,
            release,
            end: release + t.release,
        }
    }

    pub fn stage_at(&self, t: f64) -> ScriptStage {
        if t < self.grip {
            ScriptStage::Approach
        } else if t < self.lift {
            ScriptStage::Grip
        } else if t < self.transport {
            ScriptStage::Lift
        } else if t < self.lower {
            ScriptStage::Transport
        } else if t < self.release {
            ScriptStage::Lower
        } else if t < self.end {
            ScriptStage::Release
        } else {
            ScriptStage::Finished
        }
    }
}

/// Gap left between each hand and its face at the end of the approach, m.
const PRE_GRASP_CLEARANCE: f64 = 0.02;
/// Extra lateral distance of the hands at the start of a trial, m.
const START_OFFSET: f64 = 0.08;

#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    profile: AgentProfile,
    schedule: Schedule,
    /// Reference face positions at the grab height, left then right.
    faces: [Vec3; 2],
    /// Horizontal displacement from start to target.
    travel: Vec3,
    /// Inward offset of each hand relative to its face, m.
    offset: [f64; 2],
    /// Offsets frozen at the start of a release.
    release_from: [Option<(f64, f64)>; 2],
    last_t: Option<f64>,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

/// Build the scripted controller for one trial of `target`, starting from the
/// cube resting at `cube`.
pub fn run_trial_policy(
    profile: &AgentProfile,
    scene: &SceneConfig,
    mat: &Material,
    target: TargetLabel,
    cube: &CubeState,
) -> Result<ScriptedAgent, AgentError> {
    ScriptedAgent::new(profile, scene, mat, target, cube)
}

impl ScriptedAgent {
    pub fn new(
        profile: &AgentProfile,
        scene: &SceneConfig,
        _mat: &Material,
        target: TargetLabel,
        cube: &CubeState,
    ) -> Result<Self, AgentError> {
        profile.validate()?;
        let h = cube.half_width();
        let goal = scene.target(target);
        let travel = Vec3::new(goal.center.x - cube.position.x, 0.0, goal.center.z - cube.position.z);

        // The placed cube and both hands at full lateral reach must stay in the room.
        let room = &scene.room_bounds;
        let margin = h + PRE_GRASP_CLEARANCE + START_OFFSET;
        let placed = cube.position + travel;
        let lifted = placed + Vec3::new(0.0, profile.lift_height * (1.0 + profile.lead_gain), 0.0);
        let reach_ok = [-1.0, 1.0].iter().all(|s| {
            room.contains(&(placed + Vec3::new(s * margin, 0.0, 0.0)))
                && room.contains(&(lifted + Vec3::new(s * margin, h, 0.0)))
        }) && room.contains(&(placed + Vec3::new(0.0, 0.0, h)))
            && room.contains(&(placed - Vec3::new(0.0, 0.0, h)));
        if !reach_ok {
            return Err(AgentError::UnreachableTarget(target));
        }

        let faces = [
            cube.position - Vec3::new(h, 0.0, 0.0),
            cube.position + Vec3::new(h, 0.0, 0.0),
        ];
        let noise = (profile.noise_std > 0.0)
            .then(|| Normal::new(0.0, profile.noise_std).expect("validated std"));
        Ok(Self {
            profile: profile.clone(),
            schedule: Schedule::from_timing(&profile.timing),
            faces,
            travel,
            offset: [-(PRE_GRASP_CLEARANCE + START_OFFSET); 2],
            release_from: [None; 2],
            last_t: None,
            rng: ChaCha8Rng::seed_from_u64(profile.seed),
            noise,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Where each hand starts the trial.
    pub fn initial_positions(&self) -> [Vec3; 2] {
        let o = PRE_GRASP_CLEARANCE + START_OFFSET;
        [
            self.faces[0] - Vec3::new(o, 0.0, 0.0),
            self.faces[1] + Vec3::new(o, 0.0, 0.0),
        ]
    }

    /// Planned displacement of the grip midpoint from the grab point.
    fn carry(&self, t: f64) -> Vec3 {
        let s = &self.schedule;
        let t_cfg = &self.profile.timing;
        let lift = self.profile.lift_height;
        match s.stage_at(t) {
            ScriptStage::Approach | ScriptStage::Grip => Vec3::zeros(),
            ScriptStage::Lift => Vec3::new(0.0, lift * mj_shape((t - s.lift) / t_cfg.lift), 0.0),
            ScriptStage::Transport => {
                Vec3::new(0.0, lift, 0.0) + self.travel * mj_shape((t - s.transport) / t_cfg.transport)
            }
            ScriptStage::Lower => {
                self.travel + Vec3::new(0.0, lift * (1.0 - mj_shape((t - s.lower) / t_cfg.lower)), 0.0)
            }
            ScriptStage::Release | ScriptStage::Finished => self.travel,
        }
    }

    /// Per-hand displacement with the leading hand's non-lateral motion
    /// stretched. The base path is shrunk so the midpoint still lands on the
    /// target.
    fn hand_displacement(&self, side: Side, carry: &Vec3) -> Vec3 {
        let mean = 0.5 * (self.profile.lead_factor(Side::Left) + self.profile.lead_factor(Side::Right));
        let k = self.profile.lead_factor(side) / mean;
        Vec3::new(carry.x, k * carry.y, k * carry.z)
    }

    fn releasing(&self, side: Side, t: f64) -> bool {
        let s = &self.schedule;
        t >= s.release
            || (self.profile.fault == Fault::ReleaseMidTransport
                && side == Side::Right
                && t >= s.transport + 0.5 * self.profile.timing.transport)
    }

    fn advance(&mut self, obs: &Observation) {
        let t = obs.t;
        let dt = self.last_t.map_or(0.0, |last| (t - last).max(0.0));
        self.last_t = Some(t);
        let s = self.schedule.clone();
        let approach_gap = -PRE_GRASP_CLEARANCE;
        let retreat = -(PRE_GRASP_CLEARANCE + START_OFFSET);
        // Once either hand lets go, the other stops regulating and holds its offset.
        let any_release = Side::BOTH.iter().any(|&side| self.releasing(side, t));
        for side in Side::BOTH {
            let i = side.index();
            if self.releasing(side, t) {
                let start = if self.profile.fault == Fault::ReleaseMidTransport && side == Side::Right && t < s.release {
                    s.transport + 0.5 * self.profile.timing.transport
                } else {
                    s.release
                };
                let (t0, o0) = *self.release_from[i].get_or_insert((start, self.offset[i]));
                let u = (t - t0) / self.profile.timing.release;
                self.offset[i] = o0 + (retreat - o0) * mj_shape(u);
                continue;
            }
            match s.stage_at(t) {
                ScriptStage::Approach => {
                    self.offset[i] = retreat + (approach_gap - retreat) * mj_shape(t / self.profile.timing.approach);
                }
                ScriptStage::Grip | ScriptStage::Lift | ScriptStage::Transport | ScriptStage::Lower if !any_release => {
                    let jitter = match &self.noise {
                        Some(n) => n.sample(&mut self.rng),
                        None => 0.0,
                    };
                    let sp = self.profile.grip_setpoint + jitter;
                    self.offset[i] += grip_regulator(obs.lateral_force[i], sp, self.profile.grip_gain, dt);
                }
                _ => {}
            }
        }
    }

    fn positions(&self, t: f64) -> [Vec3; 2] {
        let carry = self.carry(t);
        Side::BOTH.map(|side| {
            let i = side.index();
            let inward = Vec3::new(-side.sign() * self.offset[i], 0.0, 0.0);
            self.faces[i] + inward + self.hand_displacement(side, &carry)
        })
    }
}

impl CommandSource for ScriptedAgent {
    fn next_command(&mut self, obs: &Observation) -> Result<EeCommand, SourceError> {
        self.advance(obs);
        let [left_pos, right_pos] = self.positions(obs.t);
        Ok(EeCommand {
            t: obs.t,
            left_pos,
            right_pos,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::MaterialId;

    #[test]
    fn min_jerk_boundaries() {
        let p0 = Vec3::new(0.1, -0.2, 0.3);
        let p1 = Vec3::new(0.5, 0.1, -0.4);
        let a = min_jerk(&p0, &p1, 2.0, 0.0).unwrap();
        let b = min_jerk(&p0, &p1, 2.0, 2.0).unwrap();
        assert_eq!(a.pos, p0);
        assert!((b.pos - p1).amax() < 1e-15);
        for s in [a, b] {
            assert!(s.vel.amax() < 1e-15);
            assert!(s.acc.amax() < 1e-12);
        }
    }

    #[test]
    fn min_jerk_peak_speed() {
        let p0 = Vec3::zeros();
        let p1 = Vec3::new(0.3, 0.0, 0.4);
        let mid = min_jerk(&p0, &p1, 2.0, 1.0).unwrap();
        assert!((mid.vel.norm() - 1.875 * 0.5 / 2.0).abs() < 1e-12);
        // The midpoint is the maximum.
        for k in 0..=200 {
            let s = min_jerk(&p0, &p1, 2.0, k as f64 * 0.01).unwrap();
            assert!(s.vel.norm() <= mid.vel.norm() + 1e-15);
        }
    }

    #[test]
    fn min_jerk_derivatives_match_differences() {
        let p0 = Vec3::zeros();
        let p1 = Vec3::new(1.0, 2.0, -1.0);
        let h = 1e-6;
        for t in [0.3, 0.9, 1.4] {
            let s = min_jerk(&p0, &p1, 1.7, t).unwrap();
            let a = min_jerk(&p0, &p1, 1.7, t - h).unwrap();
            let b = min_jerk(&p0, &p1, 1.7, t + h).unwrap();
            assert!(((b.pos - a.pos) / (2.0 * h) - s.vel).amax() < 1e-7);
            assert!(((b.vel - a.vel) / (2.0 * h) - s.acc).amax() < 1e-6);
        }
    }

    #[test]
    fn min_jerk_rejects_bad_time() {
        let p = Vec3::zeros();
        assert!(matches!(min_jerk(&p, &p, 1.0, 1.5), Err(AgentError::TimeOutOfRange { .. })));
        assert!(matches!(min_jerk(&p, &p, 1.0, -0.1), Err(AgentError::TimeOutOfRange { .. })));
        assert_eq!(min_jerk(&p, &p, 0.0, 0.0), Err(AgentError::NonPositiveDuration(0.0)));
    }

    #[test]
    fn regulator_fixed_point() {
        assert_eq!(grip_regulator(3.0, 3.0, 0.1, 1e-3), 0.0);
        assert!(grip_regulator(1.0, 3.0, 0.1, 1e-3) > 0.0);
        assert!(grip_regulator(5.0, 3.0, 0.1, 1e-3) < 0.0);
    }

    fn agent(profile: &AgentProfile, target: TargetLabel) -> ScriptedAgent {
        let scene = SceneConfig::default();
        let mat = Material::lookup(MaterialId::MSHB);
        let cube = crate::haptics::PhysicsParams::default().resting_cube(&scene.start_point, scene.cube_width);
        run_trial_policy(profile, &scene, &mat, target, &cube).unwrap()
    }

    #[test]
    fn same_seed_same_stream() {
        let profile = AgentProfile {
            noise_std: 0.3,
            seed: 7,
            ..AgentProfile::default()
        };
        let stream = |mut a: ScriptedAgent| {
            (0..6000)
                .map(|k| {
                    let obs = Observation {
                        t: k as f64 * 1e-3,
                        lateral_force: [1.0 + (k % 7) as f64, 2.0],
                        cube_position: Vec3::zeros(),
                    };
                    a.next_command(&obs).unwrap()
                })
                .collect::<Vec<_>>()
        };
        let a = stream(agent(&profile, TargetLabel::R));
        let b = stream(agent(&profile, TargetLabel::R));
        assert_eq!(a, b);
        let c = stream(agent(&AgentProfile { seed: 8, ..profile }, TargetLabel::R));
        assert_ne!(a, c);
    }

    #[test]
    fn unreachable_target_rejected() {
        let scene = crate::world::build_scene(1.5, 0.15, 0.2).unwrap();
        let mat = Material::lookup(MaterialId::MSHB);
        let cube = crate::haptics::PhysicsParams::default().resting_cube(&scene.start_point, 0.2);
        let err = run_trial_policy(&AgentProfile::default(), &scene, &mat, TargetLabel::L, &cube).unwrap_err();
        assert_eq!(err, AgentError::UnreachableTarget(TargetLabel::L));
    }

    #[test]
    fn lead_scaling_preserves_midpoint() {
        let profile = AgentProfile {
            lead_hand: LeadHand::Right,
            lead_gain: 0.3,
            ..AgentProfile::default()
        };
        let a = agent(&profile, TargetLabel::C);
        let carry = Vec3::new(0.1, 0.1, 0.4);
        let l = a.hand_displacement(Side::Left, &carry);
        let r = a.hand_displacement(Side::Right, &carry);
        assert!((0.5 * (l + r) - carry).amax() < 1e-15);
        assert!((r.z / l.z - 1.3).abs() < 1e-12);
        assert_eq!(l.x, r.x);
    }
}
