//! Fixed-step physics core: god-object tracking, virtual-coupling forces,
//! translational cube dynamics and break/slip detection.
//!
//! Everything here is a pure function of its inputs; [`step`] advances a
//! whole [`PhysicsState`] by one tick.

use serde::{Deserialize, Serialize};

use crate::world::{
    CubeState, EeState, GodObject, Material, RoomBounds, Side, Vec3, BASE_STIFFNESS,
    COUPLING_DAMPING, GRAVITY,
};

/// Haptic loop period, s.
pub const PHYSICS_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsParams {
    pub dt: f64,
    pub gravity: f64,
    /// Penalty stiffness of the floor and walls, N/m.
    pub floor_stiffness: f64,
    pub floor_damping: f64,
    /// Viscous drag on the cube's horizontal motion while it touches the
    /// floor, N·s/m.
    pub floor_drag: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            dt: PHYSICS_DT,
            gravity: GRAVITY,
            floor_stiffness: BASE_STIFFNESS,
            floor_damping: COUPLING_DAMPING,
            floor_drag: 20.0,
        }
    }
}

impl PhysicsParams {
    /// Reject parameter sets that cannot produce a meaningful simulation.
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(format!("physics time step {} s outside (0, 0.01]", self.dt));
        }
        if !(ok(self.gravity) && ok(self.floor_damping) && ok(self.floor_drag)) {
            return Err("gravity, floor damping and drag must be finite and non-negative".into());
        }
        if !(self.floor_stiffness.is_finite() && self.floor_stiffness > 0.0) {
            return Err("floor stiffness must be positive".into());
        }
        Ok(())
    }

    /// Center height at which an unsupported cube rests on the floor.
    pub fn rest_height(&self, width0: f64, mass: f64) -> f64 {
        0.5 * width0 - mass * self.gravity / self.floor_stiffness
    }

    /// Cube resting on the floor above `floor_point`.
    pub fn resting_cube(&self, floor_point: &Vec3, width0: f64) -> CubeState {
        let mut cube = CubeState::new(*floor_point, width0);
        cube.position.y = floor_point.y + self.rest_height(width0, cube.mass);
        cube
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeForce {
    /// Force rendered at the end-effector, N.
    pub f: Vec3,
    /// Depth of the end-effector behind the contacted face, m.
    pub penetration: f64,
}

impl EeForce {
    pub fn zero() -> Self {
        Self {
            f: Vec3::zeros(),
            penetration: 0.0,
        }
    }

    /// Magnitude of the lateral (grip) component.
    pub fn lateral(&self) -> f64 {
        self.f.x.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    None,
    Break,
    Slip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub kind: FailureKind,
    pub t: f64,
    /// Lateral force magnitudes at the firing instant, N.
    pub f_left: f64,
    pub f_right: f64,
}

impl FailureEvent {
    pub fn is_failure(&self) -> bool {
        self.kind != FailureKind::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub cube: CubeState,
    pub god_objects: [GodObject; 2],
    pub forces: [EeForce; 2],
    pub event: FailureEvent,
}

/// Project an end-effector onto the free space outside the cube.
///
/// Only the lateral faces are rendered. The contacted face is the one on the
/// side the god-object occupied on the previous tick, so a deep grip keeps
/// pushing against the face it entered through.
pub fn update_god_object(ee: &EeState, cube: &CubeState, go_prev: &GodObject, dt: f64) -> GodObject {
    let (position, in_contact) = if cube.contains(&ee.position) {
        let face = face_sign(go_prev, cube);
        let mut p = ee.position;
        p.x = cube.position.x + face * cube.half_width();
        (p, true)
    } else {
        (ee.position, false)
    };
    GodObject {
        side: ee.side,
        position,
        velocity: (position - go_prev.position) / dt,
        in_contact,
    }
}

fn face_sign(go_prev: &GodObject, cube: &CubeState) -> f64 {
    let rel = go_prev.position.x - cube.position.x;
    if rel > 0.0 {
        1.0
    } else if rel < 0.0 {
        -1.0
    } else {
        go_prev.side.sign()
    }
}

/// Keep a god-object inside the room. Returns the clamped proxy.
pub fn confine_to_room(go: &GodObject, room: &RoomBounds) -> GodObject {
    GodObject {
        position: room.clamp(&go.position),
        ..go.clone()
    }
}

/// Penalty force of the room walls on an end-effector that left the room.
pub fn wall_force(ee: &EeState, room: &RoomBounds, params: &PhysicsParams) -> Vec3 {
    let clamped = room.clamp(&ee.position);
    let depth = ee.position - clamped;
    Vec3::from_fn(|i, _| {
        if depth[i] == 0.0 {
            0.0
        } else {
            -depth[i] * params.floor_stiffness - ee.velocity[i] * params.floor_damping
        }
    })
}

/// Virtual-coupling force for one hand.
///
/// The lateral component is a spring-damper on the EE-to-proxy offset along
/// the face normal, restricted to push the hand out of the object. The
/// vertical component carries half the cube's weight when `load_share`.
pub fn compute_ee_force(
    ee: &EeState,
    go: &GodObject,
    mat: &Material,
    cube: &CubeState,
    load_share: bool,
    gravity: f64,
) -> EeForce {
    let vertical = if load_share { 0.5 * cube.mass * gravity } else { 0.0 };
    let offset = ee.position.x - go.position.x;
    if !go.in_contact || offset == 0.0 {
        return EeForce {
            f: Vec3::new(0.0, vertical, 0.0),
            penetration: 0.0,
        };
    }
    let rate = ee.velocity.x - go.velocity.x;
    let mut lateral = -offset * mat.stiffness - rate * mat.damping;
    // Contacts push, never pull.
    let normal = (go.position.x - cube.position.x).signum();
    if lateral * normal < 0.0 {
        lateral = 0.0;
    }
    EeForce {
        f: Vec3::new(lateral, vertical, 0.0),
        penetration: offset.abs(),
    }
}

/// Both hands press on opposite faces, each at least at the contact threshold.
pub fn grip_is_valid(f_left: &EeForce, f_right: &EeForce, mat: &Material) -> bool {
    f_left.lateral() >= mat.f_contact_min
        && f_right.lateral() >= mat.f_contact_min
        && f_left.f.x * f_right.f.x < 0.0
}

/// Integrate the cube one tick.
///
/// Lateral motion follows the reactions of the two coupling forces. While
/// the grip is valid, static friction makes the cube move rigidly with the
/// midpoint of the two proxies in `y` and `z`; otherwise gravity and the
/// floor penalty act. Velocity is updated before position.
pub fn step_cube(
    cube: &CubeState,
    god_objects: [&GodObject; 2],
    forces: [&EeForce; 2],
    mat: &Material,
    params: &PhysicsParams,
    dt: f64,
) -> CubeState {
    let m = cube.mass;
    let gripped = grip_is_valid(forces[0], forces[1], mat);
    let rest_y = params.rest_height(cube.width0, m);
    let sink = -cube.clearance();
    let on_floor = sink > 0.0;

    let mut next = cube.clone();

    // Reaction of the hands on the cube.
    let mut ax = -(forces[0].f.x + forces[1].f.x) / m;
    if on_floor {
        ax -= params.floor_drag * cube.velocity.x / m;
    }
    next.velocity.x = cube.velocity.x + ax * dt;
    next.position.x = cube.position.x + next.velocity.x * dt;

    if gripped {
        let mid = 0.5 * (god_objects[0].position + god_objects[1].position);
        let anchor = cube.grip_anchor.unwrap_or(cube.position - mid);
        let y = (mid.y + anchor.y).max(rest_y.min(cube.position.y));
        let z = mid.z + anchor.z;
        next.velocity.y = (y - cube.position.y) / dt;
        next.velocity.z = (z - cube.position.z) / dt;
        next.position.y = y;
        next.position.z = z;
        next.grip_anchor = Some(anchor);
    } else {
        let normal = if on_floor {
            (sink * params.floor_stiffness - cube.velocity.y * params.floor_damping).max(0.0)
        } else {
            0.0
        };
        let ay = -params.gravity + normal / m;
        let az = if on_floor {
            -params.floor_drag * cube.velocity.z / m
        } else {
            0.0
        };
        next.velocity.y = cube.velocity.y + ay * dt;
        next.velocity.z = cube.velocity.z + az * dt;
        next.position.y = cube.position.y + next.velocity.y * dt;
        next.position.z = cube.position.z + next.velocity.z * dt;
        next.grip_anchor = None;
    }
    next.held = gripped && next.clearance() > 0.0;
    next
}

/// Classify the tick. Breakage wins over slippage.
pub fn detect_failure(
    f_left: &EeForce,
    f_right: &EeForce,
    mat: &Material,
    cube: &CubeState,
    t: f64,
) -> FailureEvent {
    let (fl, fr) = (f_left.lateral(), f_right.lateral());
    let kind = if fl.max(fr) >= mat.f_break {
        FailureKind::Break
    } else if cube.held && fl.min(fr) < mat.f_contact_min {
        FailureKind::Slip
    } else {
        FailureKind::None
    };
    FailureEvent {
        kind,
        t,
        f_left: fl,
        f_right: fr,
    }
}

/// Minimum flatten factor of the visual sphere.
pub const MIN_FLATTEN: f64 = 0.2;

/// Squash factors `(flatten, widen)` of a hand's visual sphere. Flattening
/// grows with the rendered spring force and bottoms out at the breaking
/// force; widening preserves volume.
pub fn visual_deformation(penetration: f64, mat: &Material) -> (f64, f64) {
    let load = (penetration.max(0.0) * mat.stiffness / mat.f_break).min(1.0);
    let flatten = (1.0 - (1.0 - MIN_FLATTEN) * load).max(MIN_FLATTEN);
    (flatten, flatten.sqrt().recip())
}

/// Complete physical state between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsState {
    pub tick: u64,
    pub cube: CubeState,
    pub ee: [EeState; 2],
    pub god_objects: [GodObject; 2],
}

impl PhysicsState {
    pub fn new(cube: CubeState, left: Vec3, right: Vec3) -> Self {
        let ee = [EeState::at_rest(Side::Left, left), EeState::at_rest(Side::Right, right)];
        let god_objects = [GodObject::tracking(&ee[0]), GodObject::tracking(&ee[1])];
        Self {
            tick: 0,
            cube,
            ee,
            god_objects,
        }
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.tick as f64 * dt
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        finite(&self.cube.position)
            && finite(&self.cube.velocity)
            && self.ee.iter().all(|e| finite(&e.position))
            && self.god_objects.iter().all(|g| finite(&g.position))
    }
}

/// Advance the world one tick with the hands commanded to `targets`.
pub fn step(
    state: &PhysicsState,
    targets: &[Vec3; 2],
    mat: &Material,
    room: &RoomBounds,
    params: &PhysicsParams,
) -> (PhysicsState, StepOutput) {
    let dt = params.dt;
    let t = state.time(dt);
    let ee = [
        state.ee[0].advanced(targets[0], dt),
        state.ee[1].advanced(targets[1], dt),
    ];
    let god_objects = [0, 1].map(|i| {
        let go = update_god_object(&ee[i], &state.cube, &state.god_objects[i], dt);
        confine_to_room(&go, room)
    });
    let lateral = [0, 1].map(|i| compute_ee_force(&ee[i], &god_objects[i], mat, &state.cube, false, params.gravity));
    let load_share = grip_is_valid(&lateral[0], &lateral[1], mat) && state.cube.clearance() > 0.0;
    let forces = if load_share {
        [0, 1].map(|i| compute_ee_force(&ee[i], &god_objects[i], mat, &state.cube, true, params.gravity))
    } else {
        lateral
    };
    let event = detect_failure(&forces[0], &forces[1], mat, &state.cube, t);
    let cube = step_cube(
        &state.cube,
        [&god_objects[0], &god_objects[1]],
        [&forces[0], &forces[1]],
        mat,
        params,
        dt,
    );
    let next = PhysicsState {
        tick: state.tick + 1,
        cube: cube.clone(),
        ee,
        god_objects: god_objects.clone(),
    };
    (
        next,
        StepOutput {
            cube,
            god_objects,
            forces,
            event,
        },
    )
}
