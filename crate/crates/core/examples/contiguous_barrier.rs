// Traversal time of a Gaussian packet across a two-step barrier, split into
// partial-tunneling and above-barrier parts.

use tunnel_traversal::traversal::{classical_traversal, traversal_time};
use tunnel_traversal::{BarrierStack, GaussianPacket, QuadSpec, Segment, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let units = UnitSystem::default();
    // far segment first: V = 1 over width 1, then V = 2 over width 1, ending at q = -1
    let stack = BarrierStack::new(vec![Segment::new(1.0, 1.0), Segment::new(2.0, 1.0)], 1.0, units)?;
    println!("kappa = {:?}, kappa_max = {:.4}", stack.kappas(), stack.kappa_max());
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}  regime", "k0", "tau_trav", "tau_part", "tau_non", "dwell", "classical");

    for k0 in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
        let packet = GaussianPacket::new(-80.0, 3.0, k0)?;
        let r = traversal_time(&packet.density(), &stack, &QuadSpec::default())?;
        let classical = classical_traversal(&stack, k0).map_or("-".to_string(), |t| format!("{t:.6}"));
        println!(
            "{k0:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12}  {}",
            r.tau_trav, r.tau_part, r.tau_non, r.tau_dwell, classical, r.regime
        );
        assert!(r.additivity_gap() <= r.diagnostics.total_error() + 1e-14 * r.tau_trav);
    }
    Ok(())
}
