//! How much target SNR isolated symbol errors cost.
//!
//! ```text
//! cargo run --release --example error_locality -- [SNR_DB]
//! ```
//!
//! Corrupts growing fractions of the true symbols of desk-size genie frames
//! and compares the target-SNR drop with the drop expected from simply
//! erasing those resource elements.

use hybrid_isac::harness::{corruption_sweep, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snr_db: f64 = std::env::args().nth(1).map_or(Ok(10.0), |a| a.parse())?;
    let cfg = SweepConfig::desk();
    let points = corruption_sweep(&cfg, snr_db, &[0.005, 0.01, 0.02, 0.05, 0.1, 0.2])?;
    println!("genie frames at {snr_db} dB, {} realizations", cfg.realizations);
    println!(
        "{:>9} {:>9} {:>10} {:>10} {:>10}",
        "fraction", "symbols", "gamma dB", "drop dB", "erasure dB"
    );
    for p in points {
        println!(
            "{:>9.3} {:>9} {:>10.2} {:>10.2} {:>10.2}",
            p.fraction, p.corrupted, p.gamma_tar_db, p.degradation_db, p.erasure_db
        );
    }
    Ok(())
}
