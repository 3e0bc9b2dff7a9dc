//! Push both hands slowly into a resting cube and watch the god-objects stay
//! on the faces while the rendered force grows with penetration. On the
//! low-breaking-force object the squeeze ends in a break.
//!
//! ```bash
//! cargo run -p bimanual-core --example god_object_contact -- hslb
//! ```

use bimanual_core::haptics::{step, FailureKind, PhysicsParams, PhysicsState};
use bimanual_core::world::{Material, MaterialId, SceneConfig, Vec3};

fn main() {
    let id: MaterialId = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("material id, e.g. HSHB"))
        .unwrap_or(MaterialId::HSHB);
    let mat = Material::lookup(id);
    let scene = SceneConfig::default();
    let params = PhysicsParams::default();
    let cube = params.resting_cube(&scene.start_point, scene.cube_width);
    let h = cube.half_width();
    let c = cube.position;

    // Start 1 cm outside each face and close in at 2 cm/s.
    let mut state = PhysicsState::new(cube, c - Vec3::new(h + 0.01, 0.0, 0.0), c + Vec3::new(h + 0.01, 0.0, 0.0));
    let speed = 0.02;
    println!("{} (k = {} N/m, breaks at {} N)", id.as_str(), mat.stiffness, mat.f_break);
    println!("{:>6} {:>9} {:>9} {:>9} {:>8}", "t s", "ee_l x", "go_l x", "pen mm", "F_l N");
    for tick in 1..=6000u64 {
        let t = tick as f64 * params.dt;
        let inward = (speed * t).min(0.5);
        let targets = [
            c - Vec3::new(h + 0.01 - inward, 0.0, 0.0),
            c + Vec3::new(h + 0.01 - inward, 0.0, 0.0),
        ];
        let (next, out) = step(&state, &targets, &mat, &scene.room_bounds, &params);
        state = next;
        if tick % 500 == 0 {
            println!(
                "{:>6.2} {:>9.4} {:>9.4} {:>9.1} {:>8.3}",
                t,
                state.ee[0].position.x,
                out.god_objects[0].position.x,
                1e3 * out.forces[0].penetration,
                out.forces[0].lateral()
            );
        }
        if out.event.kind == FailureKind::Break {
            println!(
                "break at t = {:.3} s with F_l = {:.2} N, F_r = {:.2} N",
                out.event.t, out.event.f_left, out.event.f_right
            );
            return;
        }
    }
    println!("no break within 6 s");
}
