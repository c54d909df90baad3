//! Gray-labelled constellations and their soft demapping.
//!
//! ```text
//! cargo run --release --example modem_llr
//! ```
//!
//! Prints the QPSK and 16-QAM labelings, compares exact and max-log LLRs on
//! a few received points, and measures uncoded bit error rates over AWGN.

use hybrid_isac::modem::{demodulate_llr, hard_bits, modulate, Constellation, LlrMethod};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qpsk = Constellation::qpsk();
    let qam16 = Constellation::qam16();
    println!("QPSK\n{}\n16-QAM\n{}", qpsk.dump(), qam16.dump());

    println!("16-QAM LLRs at noise variance 0.2 (exact | max-log)");
    for y in [
        Complex64::new(0.1, -0.2),
        Complex64::new(0.9, 0.35),
        Complex64::new(-0.6, 1.2),
    ] {
        let exact = demodulate_llr(&[y], &qam16, 0.2, LlrMethod::Exact)?;
        let maxlog = demodulate_llr(&[y], &qam16, 0.2, LlrMethod::MaxLog)?;
        let fmt = |v: &[f64]| v.iter().map(|l| format!("{l:+7.2}")).collect::<Vec<_>>().join(" ");
        println!("  y = {y:+.2}: {} | {}", fmt(&exact), fmt(&maxlog));
    }

    println!("\nuncoded BER vs SNR per symbol");
    println!("{:>6} {:>10} {:>10}", "SNR", "QPSK", "16-QAM");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for snr_db in (0..=14).step_by(2) {
        let var = 10f64.powf(-snr_db as f64 / 10.0);
        let ber = |c: &Constellation, rng: &mut ChaCha8Rng| -> Result<f64, hybrid_isac::Error> {
            let bits: Vec<u8> = (0..40_000).map(|_| rng.random_range(0..2)).collect();
            let rx: Vec<Complex64> = modulate(&bits, c)?
                .into_iter()
                .map(|x| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    x + Complex64::new(re, im) * (var / 2.0).sqrt()
                })
                .collect();
            let errors = hard_bits(&rx, c).iter().zip(&bits).filter(|(a, b)| a != b).count();
            Ok(errors as f64 / bits.len() as f64)
        };
        println!(
            "{snr_db:>6} {:>10.2e} {:>10.2e}",
            ber(&qpsk, &mut rng)?,
            ber(&qam16, &mut rng)?
        );
    }
    Ok(())
}
