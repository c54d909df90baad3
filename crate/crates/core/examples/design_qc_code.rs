//! Regenerates (or evaluates) the shipped quasi-cyclic LDPC code.
//!
//! ```text
//! cargo run --release --example design_qc_code -- [--seed S] [--weights 3,3,...] [--frames F] [--write DIR]
//! ```
//!
//! Designs a dual-diagonal 8 x 16 base matrix lifted by 64, prints it,
//! measures BPSK/AWGN block error rates and optionally writes
//! `qc_n1024_r12.base` and `qc_n1024_r12.alist` into `DIR`.

use std::path::PathBuf;

use hybrid_isac::fec::qc::{design_dual_diagonal, DualDiagonalProfile};
use hybrid_isac::fec::{BpDecoder, LdpcCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seed and information-column weights of the shipped matrix.
const SHIPPED_SEED: u64 = 1;
const SHIPPED_WEIGHTS: [usize; 8] = [3; 8];

fn bler(code: &LdpcCode, ebn0_db: f64, frames: usize, seed: u64) -> (f64, f64) {
    let dec = BpDecoder::standard(code);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let es_n0 = 10f64.powf(ebn0_db / 10.0) * code.rate();
    let sigma = (1.0 / (2.0 * es_n0)).sqrt();
    let (mut errors, mut iters) = (0, 0);
    for _ in 0..frames {
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode(&info).unwrap();
        let llr: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let x = if b == 0 { 1.0 } else { -1.0 };
                let n: f64 = StandardNormal.sample(&mut rng);
                2.0 * (x + sigma * n) / (sigma * sigma)
            })
            .collect();
        let res = dec.decode(&llr).unwrap();
        iters += res.iterations;
        if res.bits != cw {
            errors += 1;
        }
    }
    (errors as f64 / frames as f64, iters as f64 / frames as f64)
}

fn main() {
    let mut seed = SHIPPED_SEED;
    let mut weights = SHIPPED_WEIGHTS.to_vec();
    let mut frames = 400;
    let mut write: Option<PathBuf> = None;
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        match a.as_str() {
            "--seed" => seed = args.next().unwrap().parse().unwrap(),
            "--frames" => frames = args.next().unwrap().parse().unwrap(),
            "--weights" => weights = args.next().unwrap().split(',').map(|w| w.parse().unwrap()).collect(),
            "--write" => write = Some(args.next().unwrap().into()),
            other => panic!("unknown argument {other}"),
        }
    }

    let profile = DualDiagonalProfile {
        lifting: 64,
        n_checks: 8,
        info_col_weights: weights,
    };
    let base = design_dual_diagonal(&profile, seed);
    let six: usize = (0..base.n_rows)
        .flat_map(|i| (0..base.n_cols).map(move |j| (i, j)))
        .map(|(i, j)| base.six_cycles_through(i, j))
        .sum();
    let mut table = String::from("[\n");
    for i in 0..base.n_rows {
        let row: Vec<String> = (0..base.n_cols)
            .map(|j| base.shifts[i * base.n_cols + j].to_string())
            .collect();
        table.push_str(&format!("    [{}],\n", row.join(", ")));
    }
    table.push_str("]\n");
    println!("seed {seed}: 4-cycles {}, 6-cycle incidences {six}", base.four_cycles());
    print!("{table}");

    let h = base.lift().unwrap();
    let code = LdpcCode::from_matrix(h.clone()).unwrap();
    println!("n = {}, k = {}", code.n(), code.k());
    for ebn0 in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let (b, it) = bler(&code, ebn0, frames, 1);
        println!("Eb/N0 {ebn0:4.1} dB  BLER {b:.4}  mean iterations {it:.2}");
    }

    if let Some(dir) = write {
        std::fs::write(dir.join("qc_n1024_r12.base"), &table).unwrap();
        std::fs::write(dir.join("qc_n1024_r12.alist"), h.to_alist()).unwrap();
        println!("wrote {}", dir.display());
    }
}
