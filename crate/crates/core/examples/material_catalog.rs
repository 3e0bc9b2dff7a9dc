//! Print the four virtual objects and what they imply for a two-hand grip:
//! the steady squeeze each hand needs to travel for a given grip force, and
//! how much headroom there is between slipping and breaking.

use bimanual_core::agents::AgentProfile;
use bimanual_core::haptics::visual_deformation;
use bimanual_core::world::{material_catalog, DEFAULT_CUBE_WIDTH};

fn main() {
    let grip = AgentProfile::default().grip_setpoint;
    println!(
        "{:<5} {:>5} {:>8} {:>8} {:>8} {:>12} {:>10} {:>8}",
        "id", "eps", "k N/m", "Fbrk N", "Fcon N", "defl@grip mm", "in band", "flatten"
    );
    for m in material_catalog() {
        // Both hands press in by grip / k, so the total deflection is twice that.
        let per_hand = grip / m.stiffness;
        let (flatten, _) = visual_deformation(per_hand, &m);
        let profile = AgentProfile {
            grip_setpoint: grip,
            ..Default::default()
        };
        println!(
            "{:<5} {:>5.1} {:>8.1} {:>8.1} {:>8.1} {:>12.1} {:>10} {:>8.2}",
            m.id.as_str(),
            m.epsilon,
            m.stiffness,
            m.f_break,
            m.f_contact_min,
            2e3 * per_hand,
            profile.setpoint_in_band(&m, DEFAULT_CUBE_WIDTH),
            flatten,
        );
    }
    println!("(grip force {grip} N per hand)");
}
