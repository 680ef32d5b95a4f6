// Staircase approximations of a smooth Gaussian bump converge to the
// continuous-barrier result, and the smooth barrier always has a partial part.

use tunnel_traversal::traversal::{traversal_time, traversal_time_smooth};
use tunnel_traversal::{GaussianPacket, Profile, QuadSpec, SmoothBarrier, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let smooth = SmoothBarrier::new(Profile::GaussianBump { height: 1.0, width: 0.6 }, (1.0, 4.0), UnitSystem::default())?;
    let rho = GaussianPacket::new(-100.0, 2.0, 1.8)?.density();
    let spec = QuadSpec::default();
    let exact = traversal_time_smooth(&rho, &smooth, &spec)?;
    println!(
        "smooth: tau_trav = {:.10}  tau_part = {:.10}  tau_non = {:.10}  ({})",
        exact.tau_trav, exact.tau_part, exact.tau_non, exact.regime
    );
    for n in [4, 16, 64, 256, 1024] {
        let r = traversal_time(&rho, &smooth.discretize(n)?, &spec)?;
        println!(
            "n = {n:>5}: tau_trav = {:.10}  relative error {:.2e}",
            r.tau_trav,
            ((r.tau_trav - exact.tau_trav) / exact.tau_trav).abs()
        );
    }
    Ok(())
}
