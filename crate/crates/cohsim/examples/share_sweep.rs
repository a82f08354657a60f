//! Runs the coherency-share sweep on the two-area system and prints the
//! centre-of-inertia frequency metrics for every share.
//!
//! cargo run --release -p cohsim --example share_sweep

use cohsim::catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = catalog::find("EXP-CSWEEP").ok_or("catalog entry missing")?;
    let (points, _) = catalog::sweep(&spec)?;
    println!("{:>8} {:>10} {:>12} {:>10}", "share", "status", "p2p (pu)", "settle (s)");
    for p in &points {
        match p.metric("coi.freq") {
            Some(m) => println!("{:>8} {:>10} {:>12.3e} {:>10.2}", p.label, p.status(), m.peak_to_peak, m.settling_time),
            None => println!("{:>8} {:>10}", p.label, p.status()),
        }
    }
    Ok(())
}
