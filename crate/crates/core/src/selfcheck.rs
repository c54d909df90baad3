//! Fast invariant checks run by `isac-sim validate`.
//!
//! Each check compares an implementation against an independent computation
//! (a direct sum, a closed form or a brute-force search) on small inputs.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::channel::{steering_range, PathParams, Scenario};
use crate::fec::{BpDecoder, LdpcCode};
use crate::grid::FrameGrid;
use crate::modem::{demodulate_llr, Constellation, LlrMethod};
use crate::pipeline::{FrameRunner, FrameSeeds};
use crate::planner::{spectral_efficiency, AllocationMode, FramePlan, Numerology};
use crate::radar::{periodogram, threshold_mask, CfarConfig};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn spectral_efficiency_check() -> CheckOutcome {
    let h = spectral_efficiency(&FramePlan::reference(AllocationMode::Hybrid));
    let c = spectral_efficiency(&FramePlan::reference(AllocationMode::CommCentric));
    outcome(
        "spectral efficiency",
        h == 1.9375 && c == 2.0,
        format!("hybrid {h}, comm-centric {c} bits/symbol"),
    )
}

fn periodogram_check(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (n, m, pad) = (8, 6, (2, 2));
    let h = FrameGrid::from_shape_simple_fn((n, m), || Complex64::new(rng.random(), rng.random()));
    let p = match periodogram(&h, pad, (1.0, 1.0)) {
        Ok(p) => p,
        Err(e) => return outcome("periodogram", false, e.to_string()),
    };
    let (rows, cols) = (n * pad.0, m * pad.1);
    let mut worst = 0.0f64;
    let peak = p.power.iter().cloned().fold(0.0, f64::max);
    for k in 0..rows {
        for l in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((i, j), v) in h.indexed_iter() {
                let ph = 2.0 * PI * (k as f64 * i as f64 / rows as f64 - l as f64 * j as f64 / cols as f64);
                acc += v * Complex64::from_polar(1.0, ph);
            }
            let direct = acc.norm_sqr() / (rows * cols) as f64;
            worst = worst.max((direct - p.power[[k, l]]).abs() / peak);
        }
    }
    let energy: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    let parseval = (p.power.sum() - energy).abs() / energy;
    outcome(
        "periodogram vs direct sum",
        worst < 1e-9 && parseval < 1e-9,
        format!("max rel. error {worst:.2e}, Parseval error {parseval:.2e}"),
    )
}

fn steering_check() -> CheckOutcome {
    let wrap = steering_range(SPEED_OF_LIGHT / 120e3, 64, 120e3);
    let worst = wrap.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);
    outcome(
        "range steering wrap",
        worst < 1e-9,
        format!("max |a_n - 1| = {worst:.2e}"),
    )
}

fn llr_check(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let c = Constellation::qam16();
    let var = 0.3;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let y = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let llr = demodulate_llr(&[y], &c, var, LlrMethod::Exact).expect("valid variance");
        for (bit, l) in llr.iter().enumerate() {
            let (mut p0, mut p1) = (0.0, 0.0);
            for (label, &s) in c.points().iter().enumerate() {
                let w = (-(y - s).norm_sqr() / var).exp();
                if (label >> (3 - bit)) & 1 == 0 {
                    p0 += w;
                } else {
                    p1 += w;
                }
            }
            worst = worst.max((l - (p0 / p1).ln()).abs());
        }
    }
    outcome(
        "16-QAM LLR vs brute force",
        worst < 1e-9,
        format!("max abs error {worst:.2e}"),
    )
}

fn decoder_check(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let code = LdpcCode::shipped();
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let cw = match code.encode(&info) {
        Ok(cw) => cw,
        Err(e) => return outcome("LDPC encode/decode", false, e.to_string()),
    };
    let syndrome = code.syndrome(&cw).unwrap_or(usize::MAX);
    let dec = BpDecoder::standard(code);
    let mut llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
    for _ in 0..3 {
        let i = rng.random_range(0..llr.len());
        llr[i] = -llr[i];
    }
    let ok = dec.decode(&llr).map(|r| r.bits == cw).unwrap_or(false);
    outcome(
        "LDPC encode/decode",
        syndrome == 0 && ok,
        format!("syndrome weight {syndrome}, three flips corrected: {ok}"),
    )
}

fn cfar_check(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let cfg = CfarConfig {
        p_fa: 1e-2,
        ..CfarConfig::default()
    };
    let power = Array2::from_shape_simple_fn((256, 256), || Exp1.sample(rng));
    match threshold_mask(&power, &cfg) {
        Ok(mask) => {
            let rate = mask.iter().filter(|b| **b).count() as f64 / mask.len() as f64;
            outcome(
                "CA-CFAR false-alarm rate",
                rate > 0.3e-2 && rate < 3e-2,
                format!("measured {rate:.2e} for configured 1e-2"),
            )
        }
        Err(e) => outcome("CA-CFAR false-alarm rate", false, e.to_string()),
    }
}

fn closed_form_csi_check() -> CheckOutcome {
    let plan = FramePlan {
        numerology: Numerology::new(48, 28, 120e3, 27.4e9, 0.0).expect("valid"),
        ..FramePlan::reference(AllocationMode::GenieAided)
    };
    let num = plan.numerology;
    let reference = PathParams {
        gain: Complex64::from_polar(2e-4, 0.4),
        range: 230.0,
        doppler: -300.0,
        is_reference: true,
    };
    let target = PathParams {
        gain: Complex64::from_polar(5e-6, 2.0),
        range: 290.0,
        doppler: 800.0,
        is_reference: false,
    };
    let scenario = Scenario {
        reference,
        targets: vec![target],
    };
    let code = LdpcCode::shipped();
    let result = FrameRunner::new(&plan, code, BpDecoder::standard(code)).and_then(|r| {
        r.run(
            &scenario,
            AllocationMode::GenieAided,
            f64::INFINITY,
            FrameSeeds { bits: 1, noise: 2 },
        )
    });
    let frame = match result {
        Ok(f) => f,
        Err(e) => return outcome("closed-form sensing CSI", false, e.to_string()),
    };
    let ratio = target.gain / reference.gain;
    let mut worst = 0.0f64;
    for ((n, m), v) in frame.h_hat.indexed_iter() {
        let expected = 1.0
            + ratio
                * Complex64::from_polar(
                    1.0,
                    -2.0 * PI * n as f64 * num.subcarrier_spacing * 60.0 / SPEED_OF_LIGHT,
                )
                * Complex64::from_polar(1.0, 2.0 * PI * m as f64 * num.symbol_duration * 1100.0);
        worst = worst.max((v - expected).norm());
    }
    outcome(
        "closed-form sensing CSI",
        worst < 1e-9,
        format!("max abs error {worst:.2e}"),
    )
}

/// Runs every check with a fixed seed.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    vec![
        spectral_efficiency_check(),
        steering_check(),
        periodogram_check(&mut rng),
        llr_check(&mut rng),
        decoder_check(&mut rng),
        cfar_check(&mut rng),
        closed_form_csi_check(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
