//! Coded block error rate of the shipped LDPC code with QPSK and 16-QAM.
//!
//! ```text
//! cargo run --release --example ldpc_waterfall -- [FRAMES_PER_POINT]
//! ```
//!
//! Codewords are mapped to symbols, sent over AWGN at a per-symbol SNR,
//! soft-demapped with exact LLRs and decoded with 20 belief-propagation
//! iterations. The distance between the two 50 % crossings is the SNR range
//! over which grid symbols decode while the rest of the frame does not.

use hybrid_isac::fec::{BpDecoder, LdpcCode};
use hybrid_isac::modem::{demodulate_llr, modulate, Constellation, LlrMethod};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn bler(code: &LdpcCode, c: &Constellation, snr_db: f64, frames: usize, rng: &mut ChaCha8Rng) -> f64 {
    let dec = BpDecoder::standard(code);
    let var = 10f64.powf(-snr_db / 10.0);
    let mut failures = 0;
    for _ in 0..frames {
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode(&info).expect("info length k");
        let rx: Vec<Complex64> = modulate(&cw, c)
            .expect("n divisible by Q")
            .into_iter()
            .map(|x| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                x + Complex64::new(re, im) * (var / 2.0).sqrt()
            })
            .collect();
        let llr = demodulate_llr(&rx, c, var, LlrMethod::Exact).expect("positive variance");
        if dec.decode(&llr).expect("length n").bits != cw {
            failures += 1;
        }
    }
    failures as f64 / frames as f64
}

fn crossing(points: &[(f64, f64)]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        (b0 >= 0.5 && b1 < 0.5).then(|| s0 + (b0 - 0.5) / (b0 - b1) * (s1 - s0))
    })
}

fn main() {
    let frames: usize = std::env::args().nth(1).map_or(200, |a| a.parse().expect("frame count"));
    let code = LdpcCode::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let snrs: Vec<f64> = (0..=20).map(|i| -1.0 + 0.5 * i as f64).collect();
    let mut curves = Vec::new();
    println!("{:>6} {:>8} {:>8}", "SNR", "QPSK", "16-QAM");
    let (qpsk, qam16) = (Constellation::qpsk(), Constellation::qam16());
    for &snr in &snrs {
        let a = bler(code, &qpsk, snr, frames, &mut rng);
        let b = bler(code, &qam16, snr, frames, &mut rng);
        println!("{snr:>6.1} {a:>8.3} {b:>8.3}");
        curves.push((snr, a, b));
    }
    let q: Vec<(f64, f64)> = curves.iter().map(|c| (c.0, c.1)).collect();
    let r: Vec<(f64, f64)> = curves.iter().map(|c| (c.0, c.2)).collect();
    match (crossing(&q), crossing(&r)) {
        (Some(a), Some(b)) => println!("50 % crossings: QPSK {a:.2} dB, 16-QAM {b:.2} dB, gap {:.2} dB", b - a),
        _ => println!("a curve does not cross 50 % inside the grid"),
    }
}
