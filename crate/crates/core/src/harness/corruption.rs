//! Controlled decision-error experiment on genie-aided frames.
//!
//! A genie frame is equalized with its true symbols, then again after a
//! fraction of them has been replaced by wrong constellation points. If
//! isolated errors only cost the coherent contribution of the affected REs,
//! the target SNR drops by roughly `-10 log10(1 - s)` for an error fraction
//! `s`, the same as erasing those REs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, frame_seeds, realization_scenario, SweepConfig};
use crate::fec::{BpDecoder, LdpcCode};
use crate::pipeline::{corrupt_symbols, sensing_equalize, FrameRunner};
use crate::planner::AllocationMode;
use crate::radar::{periodogram, target_snr};
use crate::{Error, Result};

const CORRUPTION_TAG: u64 = 4;

/// Mean target SNR at one corruption fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorruptionPoint {
    /// Corrupted REs over all REs of the frame.
    pub fraction: f64,
    pub corrupted: usize,
    /// Mean of the linear target SNRs, in dB.
    pub gamma_tar_db: f64,
    /// Drop from the uncorrupted frames, dB.
    pub degradation_db: f64,
    /// Drop expected from erasing the same REs, dB.
    pub erasure_db: f64,
}

/// Runs `cfg.realizations` genie frames at `snr_db` and measures the target
/// SNR after corrupting each fraction of their REs. Fraction 0 is always
/// evaluated first as the reference.
pub fn corruption_sweep(cfg: &SweepConfig, snr_db: f64, fractions: &[f64]) -> Result<Vec<CorruptionPoint>> {
    cfg.validate()?;
    if let Some(f) = fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
        return Err(Error::InvalidParameter(format!(
            "corruption fraction {f} outside [0, 1)"
        )));
    }
    let code = LdpcCode::shipped();
    let plan = cfg.frame.plan(AllocationMode::GenieAided)?;
    let decoder = BpDecoder::new(code, cfg.decoder.algorithm, cfg.decoder.max_iterations);
    let mut runner = FrameRunner::new(&plan, code, decoder)?;
    runner.keep_diagnostics = true;
    runner.remodulation = cfg.decoder.remodulation;
    let re_map = runner.re_map(AllocationMode::GenieAided);
    let n_re = plan.numerology.n_re();
    let all: Vec<f64> = std::iter::once(0.0).chain(fractions.iter().copied()).collect();
    let counts: Vec<usize> = all.iter().map(|f| (f * n_re as f64).round() as usize).collect();
    let pad = (cfg.radar.pad_range, cfg.radar.pad_doppler);

    let per_real = |r: usize| -> Result<Vec<f64>> {
        let scenario = realization_scenario(cfg, r)?;
        let frame = runner.run(
            &scenario,
            AllocationMode::GenieAided,
            snr_db,
            frame_seeds(cfg.seed, 0, r),
        )?;
        let diag = frame.diagnostics.as_ref().expect("diagnostics enabled");
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, CORRUPTION_TAG, r as u64, i as u64]));
                let mut x_hat = diag.x.clone();
                corrupt_symbols(&mut x_hat, &diag.y_hat, re_map, &plan, count, &mut rng)?;
                let h_hat = sensing_equalize(&diag.y_hat, &x_hat, re_map, &plan)?;
                let p = periodogram(&h_hat, pad, frame.csi_spacing)?;
                Ok(target_snr(&p, &p.truth_bins(&scenario.truth()))?.gamma)
            })
            .collect()
    };
    let gammas: Vec<Vec<f64>> = (0..cfg.realizations)
        .into_par_iter()
        .map(per_real)
        .collect::<Result<_>>()?;

    let mean_db = |i: usize| 10.0 * (gammas.iter().map(|g| g[i]).sum::<f64>() / gammas.len() as f64).log10();
    let reference = mean_db(0);
    Ok((1..all.len())
        .map(|i| {
            let gamma_tar_db = mean_db(i);
            CorruptionPoint {
                fraction: all[i],
                corrupted: counts[i],
                gamma_tar_db,
                degradation_db: reference - gamma_tar_db,
                erasure_db: -10.0 * (1.0 - counts[i] as f64 / n_re as f64).log10(),
            }
        })
        .collect())
}
