//! Abstract four-joint arm: shoulder abduction/adduction, shoulder
//! pronation/supination, shoulder flexion/extension and elbow
//! flexion/extension. Wrist joints are locked.
//!
//! All positions are in the robot frame, metres; angles in radians.

use nalgebra::{Matrix3, Matrix3x4, Rotation3, Unit, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Side, Vec3};

pub const JOINT_NAMES: [&str; 4] = ["sh-AA", "sh-PS", "sh-FE", "eb-FE"];

/// Motor torque limits in joint order, N·m.
pub const DEFAULT_TORQUE_LIMITS: [f64; 4] = [35.0, 35.0, 25.0, 20.0];

/// Lateral distance between the two shoulder joints, m.
pub const DEFAULT_SHOULDER_SEPARATION: f64 = 0.40;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("joint {joint} at {value} rad outside [{lo}, {hi}]")]
    OutOfLimits {
        joint: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid arm model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    /// Shoulder center in the robot frame.
    pub base: Vec3,
    /// Upper arm and forearm lengths.
    pub link_lengths: [f64; 2],
    /// Joint axes, each expressed in its parent frame.
    pub joint_axes: [Vec3; 4],
    pub joint_limits: [(f64, f64); 4],
    pub torque_limits: [f64; 4],
}

impl Default for ArmModel {
    fn default() -> Self {
        Self {
            base: Vec3::zeros(),
            link_lengths: [0.30, 0.25],
            joint_axes: [Vec3::z(), Vec3::y(), Vec3::x(), Vec3::x()],
            joint_limits: [(-1.6, 1.6), (-1.6, 1.6), (-3.0, 1.6), (-2.6, 2.6)],
            torque_limits: DEFAULT_TORQUE_LIMITS,
        }
    }
}

impl ArmModel {
    /// Arm mounted for `side`, shoulders `separation` apart.
    pub fn for_side(side: Side, separation: f64) -> Self {
        Self {
            base: Vec3::new(side.sign() * 0.5 * separation, 0.35, -0.35),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.link_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(KinematicsError::InvalidModel("link lengths must be positive".into()));
        }
        if self.joint_axes.iter().any(|a| !(a.norm() > 0.0)) {
            return Err(KinematicsError::InvalidModel("joint axes must be non-zero".into()));
        }
        if self.joint_limits.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(KinematicsError::InvalidModel("joint limits must be ordered".into()));
        }
        if self.torque_limits.iter().any(|t| !(*t >= 0.0)) {
            return Err(KinematicsError::InvalidModel("torque limits must be non-negative".into()));
        }
        Ok(())
    }

    pub fn check_limits(&self, q: &Vector4<f64>) -> Result<(), KinematicsError> {
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            if !(q[i] >= lo && q[i] <= hi) {
                return Err(KinematicsError::OutOfLimits {
                    joint: JOINT_NAMES[i],
                    value: q[i],
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, q: &Vector4<f64>) -> Vector4<f64> {
        Vector4::from_fn(|i, _| q[i].clamp(self.joint_limits[i].0, self.joint_limits[i].1))
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: Vector4<f64>,
    pub qdot: Vector4<f64>,
}

impl JointState {
    pub fn at(q: Vector4<f64>) -> Self {
        Self {
            q,
            qdot: Vector4::zeros(),
        }
    }
}

/// World-frame pose data of the chain at one configuration.
struct ChainFrames {
    elbow: Vec3,
    hand: Vec3,
    /// World-frame joint axes.
    axes: [Vec3; 4],
}

fn chain(arm: &ArmModel, q: &Vector4<f64>) -> ChainFrames {
    let rot = |i: usize| Rotation3::from_axis_angle(&Unit::new_normalize(arm.joint_axes[i]), q[i]);
    let r1 = rot(0);
    let r12 = r1 * rot(1);
    let r123 = r12 * rot(2);
    let r1234 = r123 * rot(3);
    let elbow = arm.base + r123 * Vec3::new(0.0, -arm.link_lengths[0], 0.0);
    let hand = elbow + r1234 * Vec3::new(0.0, -arm.link_lengths[1], 0.0);
    let axes = [
        arm.joint_axes[0].normalize(),
        r1 * arm.joint_axes[1].normalize(),
        r12 * arm.joint_axes[2].normalize(),
        r123 * arm.joint_axes[3].normalize(),
    ];
    ChainFrames { elbow, hand, axes }
}

/// Hand position of the shoulder-elbow-hand chain.
pub fn forward_kinematics(arm: &ArmModel, q: &JointState) -> Result<Vec3, KinematicsError> {
    arm.check_limits(&q.q)?;
    Ok(chain(arm, &q.q).hand)
}

/// Elbow position, used for geometry checks.
pub fn elbow_position(arm: &ArmModel, q: &JointState) -> Result<Vec3, KinematicsError> {
    arm.check_limits(&q.q)?;
    Ok(chain(arm, &q.q).elbow)
}

/// Positional Jacobian `d(hand)/dq`, m/rad.
pub fn jacobian(arm: &ArmModel, q: &JointState) -> Result<Matrix3x4<f64>, KinematicsError> {
    arm.check_limits(&q.q)?;
    Ok(jacobian_unchecked(arm, &q.q))
}

fn jacobian_unchecked(arm: &ArmModel, q: &Vector4<f64>) -> Matrix3x4<f64> {
    let frames = chain(arm, q);
    let origins = [arm.base, arm.base, arm.base, frames.elbow];
    let mut j = Matrix3x4::zeros();
    for i in 0..4 {
        j.set_column(i, &frames.axes[i].cross(&(frames.hand - origins[i])));
    }
    j
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTorques {
    /// Torques after saturation, N·m.
    pub tau: Vector4<f64>,
    /// Torques before saturation, N·m.
    pub raw: Vector4<f64>,
    pub saturated: [bool; 4],
}

/// Map an end-effector force to joint torques through the Jacobian
/// transpose, then saturate each joint at its motor limit.
pub fn torques_from_force(arm: &ArmModel, q: &JointState, f: &Vec3) -> Result<JointTorques, KinematicsError> {
    let raw = jacobian(arm, q)?.transpose() * f;
    Ok(saturate(&raw, &arm.torque_limits))
}

pub fn saturate(raw: &Vector4<f64>, limits: &[f64; 4]) -> JointTorques {
    let mut saturated = [false; 4];
    let tau = Vector4::from_fn(|i, _| {
        let lim = limits[i];
        if raw[i].abs() > lim {
            saturated[i] = true;
            raw[i].signum() * lim
        } else {
            raw[i]
        }
    });
    JointTorques {
        tau,
        raw: *raw,
        saturated,
    }
}

/// Damped least-squares solve for a configuration whose hand reaches
/// `target`, warm-started from `seed`. Unreachable targets converge to the
/// closest in-limit configuration found.
pub fn inverse_kinematics(arm: &ArmModel, target: &Vec3, seed: &Vector4<f64>, iterations: usize) -> Vector4<f64> {
    const DAMPING: f64 = 0.05;
    let mut q = arm.clamp_to_limits(seed);
    for _ in 0..iterations {
        let err = target - chain(arm, &q).hand;
        if err.norm() < 1e-9 {
            break;
        }
        let j = jacobian_unchecked(arm, &q);
        let jjt = j * j.transpose() + Matrix3::identity() * (DAMPING * DAMPING);
        let Some(inv) = jjt.try_inverse() else { break };
        q = arm.clamp_to_limits(&(q + j.transpose() * (inv * err)));
    }
    q
}

/// A comfortable reaching posture with the elbow bent forward.
pub fn ready_posture() -> Vector4<f64> {
    Vector4::new(0.0, 0.0, -0.6, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn home_pose_hangs_down() {
        let arm = ArmModel::default();
        let p = forward_kinematics(&arm, &JointState::at(Vector4::zeros())).unwrap();
        assert!((p - Vec3::new(0.0, -0.55, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn elbow_flexion_moves_hand_by_forearm() {
        let arm = ArmModel::default();
        let q = JointState::at(Vector4::new(0.0, 0.0, 0.0, FRAC_PI_2));
        let hand = forward_kinematics(&arm, &q).unwrap();
        let elbow = elbow_position(&arm, &q).unwrap();
        assert!(((elbow - arm.base).norm() - 0.30).abs() < 1e-15);
        // Rotation of -y about +x by 90 degrees points along -z.
        assert!((hand - Vec3::new(0.0, -0.30, -0.25)).amax() < 1e-12, "{hand:?}");
    }

    #[test]
    fn out_of_limit_rejected() {
        let arm = ArmModel::default();
        let q = JointState::at(Vector4::new(0.0, 0.0, 0.0, 3.0));
        assert!(matches!(
            forward_kinematics(&arm, &q),
            Err(KinematicsError::OutOfLimits { joint: "eb-FE", .. })
        ));
        assert!(jacobian(&arm, &q).is_err());
    }

    #[test]
    fn axis_through_hand_has_zero_column() {
        // At the reference pose the upper-arm rotation axis runs through the hand.
        let arm = ArmModel::default();
        let j = jacobian(&arm, &JointState::at(Vector4::zeros())).unwrap();
        assert!(j.column(1).amax() < 1e-15);
    }

    #[test]
    fn zero_force_gives_zero_torque() {
        let arm = ArmModel::default();
        let out = torques_from_force(&arm, &JointState::at(ready_posture()), &Vec3::zeros()).unwrap();
        assert_eq!(out.tau, Vector4::zeros());
        assert_eq!(out.saturated, [false; 4]);
    }

    #[test]
    fn elbow_saturates_at_limit() {
        let arm = ArmModel::default();
        // Elbow bent 90 degrees: a force along the forearm's normal loads eb-FE with l2 * |f|.
        let q = JointState::at(Vector4::new(0.0, 0.0, 0.0, FRAC_PI_2));
        let out = torques_from_force(&arm, &q, &Vec3::new(0.0, 200.0, 0.0)).unwrap();
        assert!(out.raw[3].abs() > 20.0);
        assert_eq!(out.tau[3].abs(), 20.0);
        assert!(out.saturated[3]);
        let again = saturate(&out.tau, &arm.torque_limits);
        assert_eq!(again.tau, out.tau);
    }

    #[test]
    fn ik_reaches_target() {
        let arm = ArmModel::for_side(Side::Left, DEFAULT_SHOULDER_SEPARATION);
        let target = arm.base + Vec3::new(0.1, -0.3, 0.2);
        let q = inverse_kinematics(&arm, &target, &ready_posture(), 50);
        let hand = forward_kinematics(&arm, &JointState::at(q)).unwrap();
        assert!((hand - target).norm() < 1e-6, "{:?}", hand - target);
    }
}
