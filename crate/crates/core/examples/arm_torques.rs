//! Joint torques of the left arm holding a grip force at a few hand
//! positions, solved with the damped least-squares IK and mapped through
//! the Jacobian transpose.

use bimanual_core::kinematics::{
    forward_kinematics, inverse_kinematics, ready_posture, torques_from_force, ArmModel, JointState,
    DEFAULT_SHOULDER_SEPARATION, JOINT_NAMES,
};
use bimanual_core::world::{Side, Vec3};

fn main() {
    let arm = ArmModel::for_side(Side::Left, DEFAULT_SHOULDER_SEPARATION);
    // Grip force of the left hand pushes it back toward -x.
    let force = Vec3::new(-4.0, 0.0, 0.0);
    let targets = [
        Vec3::new(-0.10, 0.05, 0.00),
        Vec3::new(-0.05, 0.15, 0.05),
        Vec3::new(0.00, 0.05, 0.00),
        Vec3::new(-0.25, 0.15, -0.05),
    ];
    println!("reach {:.2} m, force {:?} N", arm.reach(), force.as_slice());
    print!("{:<24} {:>8}", "hand (robot frame)", "err mm");
    for name in JOINT_NAMES {
        print!(" {name:>8}");
    }
    println!();

    let mut seed = ready_posture();
    for target in targets {
        seed = inverse_kinematics(&arm, &target, &seed, 200);
        let q = JointState::at(seed);
        let reached = forward_kinematics(&arm, &q).expect("solution respects limits");
        let tau = torques_from_force(&arm, &q, &force).expect("valid posture");
        print!(
            "({:>5.2}, {:>5.2}, {:>5.2})      {:>8.2}",
            target.x,
            target.y,
            target.z,
            1e3 * (reached - target).norm()
        );
        for j in 0..4 {
            let mark = if tau.saturated[j] { "*" } else { " " };
            print!(" {:>7.3}{mark}", tau.tau[j]);
        }
        println!();
    }
    println!("torques in N·m, * marks a saturated joint");
}
