// Helium in a static field: tunneling geometry and the partial traversal
// time across the field-tilted Coulomb barrier as the field grows.

use tunnel_traversal::traversal::attoclock_scan;
use tunnel_traversal::{AttoclockBarrier, GaussianPacket, QuadSpec, UnitSystem};

fn main() -> tunnel_traversal::Result<()> {
    let helium = AttoclockBarrier::helium(0.05);
    let g = helium.geometry()?;
    println!(
        "E = 0.05: d- = {:.6}, d+ = {:.6}, exit = {:.6}, barrier top {:.6} above the bound level",
        g.d_minus,
        g.d_plus,
        g.d_exit,
        helium.peak_height()
    );
    println!("over-barrier field: {:.6}\n", helium.threshold_field());

    let fields: Vec<f64> = (0..12).map(|i| 0.01 + 0.01 * i as f64).collect();
    let rho = GaussianPacket::new(-200.0, 2.0, 0.8)?.density();
    let scan = attoclock_scan(&helium, &fields, &rho, UnitSystem::default(), &QuadSpec::default())?;
    println!("{:>8} {:>10} {:>10} {:>12}", "E", "d-", "d+", "tau_part");
    for e in &scan.entries {
        println!("{:>8.3} {:>10.4} {:>10.4} {:>12.6}", e.field, e.geometry.d_minus, e.geometry.d_plus, e.tau_part);
    }
    for (field, err) in &scan.skipped {
        println!("{field:>8.3}  skipped: {err}");
    }
    println!("\nstrictly decreasing: {}", scan.strictly_decreasing);
    Ok(())
}
