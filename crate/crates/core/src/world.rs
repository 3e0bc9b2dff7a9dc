//! Domain types shared by every part of the simulator: materials, the
//! virtual object, end-effectors and their god-objects, and the scene
//! layout with the robot/virtual-room coordinate mapping.
//!
//! Coordinates are expressed in the virtual room: `x` is lateral (left
//! negative), `y` is vertical (up positive) and `z` points from the start
//! point towards the targets. The floor is the plane `y = 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Base stiffness every material is derived from, N/m.
pub const BASE_STIFFNESS: f64 = 150.0;
/// Viscous coefficient of the virtual coupling, N·s/m.
pub const COUPLING_DAMPING: f64 = 5.0;
/// Mass of the virtual cube, kg.
pub const CUBE_MASS: f64 = 0.2;
pub const GRAVITY: f64 = 9.81;
/// Edge length of the virtual cube, m.
pub const DEFAULT_CUBE_WIDTH: f64 = 0.20;
/// Robot-to-virtual-room linear scale.
pub const DEFAULT_VR_SCALE: f64 = 2.0;
pub const DEFAULT_TARGET_RADIUS: f64 = 0.40;
pub const DEFAULT_START_DEPTH: f64 = 0.15;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("non-finite coordinate in {0:?}")]
    NonFinite([f64; 3]),
    #[error("target radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("cube width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("vr scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid material {id}: {reason}")]
    InvalidMaterial { id: MaterialId, reason: String },
    #[error("unknown material id `{0}`")]
    UnknownMaterial(String),
    #[error("unknown target label `{0}`")]
    UnknownTarget(String),
    #[error("target {0} does not fit inside the room")]
    TargetOutsideRoom(TargetLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    /// Sign of the lateral axis on this side of the body.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaterialId {
    /// High stiffness, high breaking point.
    HSHB,
    /// Medium stiffness, high breaking point.
    MSHB,
    /// Low stiffness, high breaking point.
    LSHB,
    /// High stiffness, low breaking point.
    HSLB,
}

impl MaterialId {
    pub const ALL: [MaterialId; 4] = [
        MaterialId::HSHB,
        MaterialId::MSHB,
        MaterialId::LSHB,
        MaterialId::HSLB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaterialId::HSHB => "HSHB",
            MaterialId::MSHB => "MSHB",
            MaterialId::LSHB => "LSHB",
            MaterialId::HSLB => "HSLB",
        }
    }
}

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaterialId {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaterialId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| WorldError::UnknownMaterial(s.to_string()))
    }
}

/// Haptic properties of one virtual object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub id: MaterialId,
    /// Softening parameter in `[0, 1]`.
    pub epsilon: f64,
    /// Base stiffness, N/m.
    pub k0: f64,
    /// Rendered stiffness `k0 * (1 - epsilon)`, N/m.
    pub stiffness: f64,
    /// Coupling damping, N·s/m.
    pub damping: f64,
    /// Lateral force at which the object breaks, N.
    pub f_break: f64,
    /// Minimum lateral force that holds the object without slipping, N.
    pub f_contact_min: f64,
    /// Opaque visual style label for the renderer.
    pub texture_tag: String,
}

impl Material {
    pub fn new(
        id: MaterialId,
        epsilon: f64,
        k0: f64,
        damping: f64,
        f_break: f64,
        f_contact_min: f64,
        texture_tag: impl Into<String>,
    ) -> Result<Self, WorldError> {
        let invalid = |reason: &str| WorldError::InvalidMaterial {
            id,
            reason: reason.to_string(),
        };
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid("epsilon outside [0, 1]"));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(invalid("k0 must be positive"));
        }
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(invalid("damping must be non-negative"));
        }
        if !(f_contact_min.is_finite() && f_contact_min > 0.0) {
            return Err(invalid("contact threshold must be positive"));
        }
        if !(f_break.is_finite() && f_contact_min < f_break) {
            return Err(invalid("contact threshold must be below the breaking force"));
        }
        Ok(Self {
            id,
            epsilon,
            k0,
            stiffness: k0 * (1.0 - epsilon),
            damping,
            f_break,
            f_contact_min,
            texture_tag: texture_tag.into(),
        })
    }

    /// Catalog entry for `id`.
    pub fn lookup(id: MaterialId) -> Material {
        material_catalog()
            .into_iter()
            .find(|m| m.id == id)
            .expect("catalog covers every material id")
    }
}

/// The four virtual objects used in the task.
pub fn material_catalog() -> Vec<Material> {
    let entry = |id, eps, f_break, f_contact, tag: &str| {
        Material::new(id, eps, BASE_STIFFNESS, COUPLING_DAMPING, f_break, f_contact, tag)
            .expect("catalog entries are valid")
    };
    vec![
        entry(MaterialId::HSHB, 0.0, 10.0, 2.0, "metallic"),
        entry(MaterialId::MSHB, 0.4, 10.0, 3.0, "elastic"),
        entry(MaterialId::LSHB, 0.8, 10.0, 3.0, "soft"),
        entry(MaterialId::HSLB, 0.0, 5.0, 2.0, "fragile"),
    ]
}

/// Translational state of the virtual cube. The cube never rotates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Edge length before any deformation, m.
    pub width0: f64,
    pub mass: f64,
    /// Supported off the floor by a valid two-hand grip.
    pub held: bool,
    /// Offset from the grip midpoint to the cube center, captured when the
    /// grip closes. Only the `y` and `z` components are used.
    #[serde(default)]
    pub grip_anchor: Option<Vec3>,
}

impl CubeState {
    pub fn new(position: Vec3, width0: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            width0,
            mass: CUBE_MASS,
            held: false,
            grip_anchor: None,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width0
    }

    /// Height of the bottom face above the floor (negative when sunk).
    pub fn clearance(&self) -> f64 {
        self.position.y - self.half_width()
    }

    /// Whether `p` lies strictly inside the cube volume.
    pub fn contains(&self, p: &Vec3) -> bool {
        let h = self.half_width();
        let d = p - self.position;
        d.x.abs() < h && d.y.abs() < h && d.z.abs() < h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeState {
    pub side: Side,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl EeState {
    pub fn at_rest(side: Side, position: Vec3) -> Self {
        Self {
            side,
            position,
            velocity: Vec3::zeros(),
        }
    }

    /// Advance to `position`, differencing against the previous tick.
    pub fn advanced(&self, position: Vec3, dt: f64) -> Self {
        Self {
            side: self.side,
            position,
            velocity: (position - self.position) / dt,
        }
    }
}

/// Surface-constrained proxy of one end-effector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GodObject {
    pub side: Side,
    pub position: Vec3,
    pub velocity: Vec3,
    pub in_contact: bool,
}

impl GodObject {
    pub fn tracking(ee: &EeState) -> Self {
        Self {
            side: ee.side,
            position: ee.position,
            velocity: ee.velocity,
            in_contact: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetLabel {
    L,
    C,
    R,
}

impl TargetLabel {
    pub const ALL: [TargetLabel; 3] = [TargetLabel::L, TargetLabel::C, TargetLabel::R];

    pub fn angle_deg(self) -> f64 {
        match self {
            TargetLabel::L => -45.0,
            TargetLabel::C => 0.0,
            TargetLabel::R => 45.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetLabel::L => "L",
            TargetLabel::C => "C",
            TargetLabel::R => "R",
        }
    }
}

impl fmt::Display for TargetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetLabel {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "L" | "l" | "left" => Ok(TargetLabel::L),
            "C" | "c" | "centre" | "center" => Ok(TargetLabel::C),
            "R" | "r" | "right" => Ok(TargetLabel::R),
            other => Err(WorldError::UnknownTarget(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub label: TargetLabel,
    /// Bearing from the start point, rad (negative to the left).
    pub angle: f64,
    /// Center of the target square on the floor.
    pub center: Vec3,
    /// Edge length of the target square.
    pub extent: f64,
    /// Center of the guide marker, one cube width beyond the target along z.
    pub guide: Vec3,
}

impl Target {
    /// Whether a point's floor projection lies within the target square.
    pub fn covers(&self, p: &Vec3) -> bool {
        let h = 0.5 * self.extent;
        (p.x - self.center.x).abs() <= h && (p.z - self.center.z).abs() <= h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for RoomBounds {
    fn default() -> Self {
        Self {
            min: Vec3::new(-0.6, 0.0, -0.6),
            max: Vec3::new(0.6, 1.0, 0.6),
        }
    }
}

impl RoomBounds {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| p[i].clamp(self.min[i], self.max[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub targets: Vec<Target>,
    /// Floor point below the cube's initial center.
    pub start_point: Vec3,
    pub room_bounds: RoomBounds,
    pub vr_scale: f64,
    pub cube_width: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        build_scene(DEFAULT_TARGET_RADIUS, DEFAULT_START_DEPTH, DEFAULT_CUBE_WIDTH)
            .expect("default scene parameters are valid")
    }
}

impl SceneConfig {
    pub fn target(&self, label: TargetLabel) -> &Target {
        self.targets
            .iter()
            .find(|t| t.label == label)
            .expect("scene always defines L, C and R")
    }
}

/// Lay out the start point and the three targets on a semicircle of
/// `radius` around it. `depth` is the distance of the start point from the
/// near wall of the default room.
pub fn build_scene(radius: f64, depth: f64, cube_width: f64) -> Result<SceneConfig, WorldError> {
    build_scene_in(radius, depth, cube_width, RoomBounds::default(), DEFAULT_VR_SCALE)
}

pub fn build_scene_in(
    radius: f64,
    depth: f64,
    cube_width: f64,
    room: RoomBounds,
    vr_scale: f64,
) -> Result<SceneConfig, WorldError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(WorldError::NonPositiveRadius(radius));
    }
    if !(cube_width.is_finite() && cube_width > 0.0) {
        return Err(WorldError::NonPositiveWidth(cube_width));
    }
    if !(vr_scale.is_finite() && vr_scale > 0.0) {
        return Err(WorldError::InvalidScale(vr_scale));
    }
    let start_point = Vec3::new(0.5 * (room.min.x + room.max.x), room.min.y, room.min.z + depth);
    let targets = TargetLabel::ALL
        .into_iter()
        .map(|label| {
            let angle = label.angle_deg().to_radians();
            let center = start_point + radius * Vec3::new(angle.sin(), 0.0, angle.cos());
            Target {
                label,
                angle,
                center,
                extent: cube_width,
                guide: center + Vec3::new(0.0, 0.0, cube_width),
            }
        })
        .collect();
    Ok(SceneConfig {
        targets,
        start_point,
        room_bounds: room,
        vr_scale,
        cube_width,
    })
}

fn check_finite(p: &Vec3) -> Result<(), WorldError> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(WorldError::NonFinite([p.x, p.y, p.z]))
    }
}

/// Map a robot-frame point into the virtual room.
pub fn robot_to_vr(p: &Vec3, cfg: &SceneConfig) -> Result<Vec3, WorldError> {
    check_finite(p)?;
    Ok(p * cfg.vr_scale)
}

/// Inverse of [`robot_to_vr`].
pub fn vr_to_robot(p: &Vec3, cfg: &SceneConfig) -> Result<Vec3, WorldError> {
    check_finite(p)?;
    Ok(p / cfg.vr_scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_table_values() {
        let cat = material_catalog();
        let expect = [
            (MaterialId::HSHB, 0.0, 150.0, 10.0, 2.0),
            (MaterialId::MSHB, 0.4, 90.0, 10.0, 3.0),
            (MaterialId::LSHB, 0.8, 30.0, 10.0, 3.0),
            (MaterialId::HSLB, 0.0, 150.0, 5.0, 2.0),
        ];
        assert_eq!(cat.len(), 4);
        for (m, (id, eps, k, fb, fc)) in cat.iter().zip(expect) {
            assert_eq!(m.id, id);
            assert_eq!(m.epsilon, eps);
            assert!((m.stiffness - k).abs() < 1e-12, "{id}: {}", m.stiffness);
            assert_eq!(m.stiffness, m.k0 * (1.0 - m.epsilon));
            assert_eq!(m.f_break, fb);
            assert_eq!(m.f_contact_min, fc);
            assert!(m.f_contact_min < m.f_break);
        }
    }

    #[test]
    fn material_rejects_inverted_thresholds() {
        let err = Material::new(MaterialId::HSHB, 0.0, 150.0, 5.0, 2.0, 3.0, "x").unwrap_err();
        assert!(matches!(err, WorldError::InvalidMaterial { .. }));
        assert!(Material::new(MaterialId::HSHB, 1.5, 150.0, 5.0, 5.0, 2.0, "x").is_err());
    }

    #[test]
    fn robot_vr_mapping() {
        let cfg = SceneConfig::default();
        let p = Vec3::new(0.1, 0.2, 0.0);
        assert_eq!(robot_to_vr(&p, &cfg).unwrap(), Vec3::new(0.2, 0.4, 0.0));
        assert_eq!(robot_to_vr(&Vec3::zeros(), &cfg).unwrap(), Vec3::zeros());
        let back = robot_to_vr(&vr_to_robot(&p, &cfg).unwrap(), &cfg).unwrap();
        assert!((back - p).amax() < 1e-12);
        assert!(robot_to_vr(&Vec3::new(f64::NAN, 0.0, 0.0), &cfg).is_err());
        assert!(vr_to_robot(&Vec3::new(0.0, f64::INFINITY, 0.0), &cfg).is_err());
    }

    #[test]
    fn scene_targets_on_semicircle() {
        let scene = build_scene(0.40, 0.15, 0.20).unwrap();
        let c = scene.target(TargetLabel::C);
        let ahead = c.center - scene.start_point;
        assert!((ahead - Vec3::new(0.0, 0.0, 0.40)).amax() < 1e-12);
        for t in &scene.targets {
            assert!(((t.center - scene.start_point).norm() - 0.40).abs() < 1e-12);
            assert!((t.guide - t.center - Vec3::new(0.0, 0.0, 0.20)).amax() < 1e-15);
        }
        let l = scene.target(TargetLabel::L).center - scene.start_point;
        let r = scene.target(TargetLabel::R).center - scene.start_point;
        assert!((l.x + r.x).abs() < 1e-12 && l.x < 0.0);
        assert!((l.z - r.z).abs() < 1e-12);
        assert_eq!(build_scene(0.0, 0.15, 0.2), Err(WorldError::NonPositiveRadius(0.0)));
        assert!(build_scene(-1.0, 0.15, 0.2).is_err());
    }

    #[test]
    fn parse_labels() {
        assert_eq!("mshb".parse::<MaterialId>().unwrap(), MaterialId::MSHB);
        assert_eq!("R".parse::<TargetLabel>().unwrap(), TargetLabel::R);
        assert!("XX".parse::<MaterialId>().is_err());
    }
}
