// Expectation of the free time-of-arrival operator on a position grid,
// against the classical arrival time |q0|/v0.

use tunnel_traversal::oracle::free_toa_expectation;
use tunnel_traversal::{GaussianPacket, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let units = UnitSystem::default();
    for (q0, sigma, k0) in [(-50.0, 2.0, 10.0), (-50.0, 2.0, 5.0), (-30.0, 1.0, 4.0), (-100.0, 5.0, 2.0)] {
        let p = GaussianPacket::new(q0, sigma, k0)?;
        let t = free_toa_expectation(&p, units, 8192)?;
        let classical = -q0 / units.speed(k0);
        println!(
            "q0 = {q0:>7.1} sigma = {sigma:>4.1} k0 = {k0:>5.1}:  <T_F> = {:.8}  classical {classical:.8}  (coarse/fine {:.8} / {:.8})",
            t.value, t.coarse, t.fine
        );
    }
    Ok(())
}
