// The Weyl time kernel of a two-step barrier: numeric kernel against the
// closed-form pieces, and the arrival-time difference computed in ζ-space
// compared with the k-space dwell time.

use tunnel_traversal::oracle::{delta_tau_zeta, path_equivalence, region_map_calibration};
use tunnel_traversal::{BarrierStack, GaussianPacket, QuadSpec, Segment, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let stack = BarrierStack::new(vec![Segment::new(0.5, 1.2), Segment::new(2.0, 0.7)], 0.9, UnitSystem::default())?;
    let spec = QuadSpec::default();
    let zetas: Vec<f64> = (0..10).map(|i| 0.4 * i as f64).collect();
    let table = region_map_calibration(&stack, &zetas, &spec)?;
    print!("{}", table.render());

    let packet = GaussianPacket::new(-60.0, 2.5, 3.0)?;
    let d = delta_tau_zeta(&packet, &stack, &spec)?;
    println!("\nQ* = {:.10}", d.q_star);
    for (n, r) in d.r_star.iter().enumerate() {
        println!("R*[{n}] = {r:.10}");
    }
    println!("delta tau = {:.10} (free {:.10}, barrier {:.10})", d.delta_tau, d.tau_free_part, d.tau_barrier_part);
    let eq = path_equivalence(&packet, &stack, &spec)?;
    println!(
        "zeta space {:.12} vs k space {:.12}: relative deviation {:.1e}",
        eq.zeta_space, eq.k_space, eq.relative_deviation
    );
    Ok(())
}
