// Regime classification from the support of the momentum density, and the
// vanishing traversal time of a purely under-barrier packet.

use tunnel_traversal::traversal::traversal_time;
use tunnel_traversal::{BarrierStack, GaussianPacket, Interval, QuadSpec, Segment, SpectralDensity, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let stack = BarrierStack::new(
        vec![Segment::new(1.0, 0.8), Segment::new(3.0, 0.5), Segment::new(2.0, 1.2)],
        0.5,
        UnitSystem::default(),
    )?;
    let (kmin, kmax) = (stack.kappa_min(), stack.kappa_max());
    println!("kappa_min = {kmin:.4}, kappa_max = {kmax:.4}\n");

    let base = GaussianPacket::new(-100.0, 1.0, 0.5 * (kmin + kmax))?.density();
    let cases: Vec<(&str, Box<dyn SpectralDensity>)> = vec![
        ("untruncated", Box::new(base.clone())),
        ("below kappa_min", Box::new(base.truncate(Interval::new(0.0, kmin))?)),
        ("between kappas", Box::new(base.truncate(Interval::new(kmin, kmax))?)),
        ("above kappa_max", Box::new(base.truncate(Interval::new(kmax, kmax + 5.0))?)),
    ];
    for (label, rho) in cases {
        let r = traversal_time(rho.as_ref(), &stack, &QuadSpec::default())?;
        println!(
            "{label:<16} {:<18} tau_trav = {:.6e}  tau_part = {:.6e}  tau_non = {:.6e}",
            r.regime.to_string(),
            r.tau_trav,
            r.tau_part,
            r.tau_non
        );
    }
    Ok(())
}
