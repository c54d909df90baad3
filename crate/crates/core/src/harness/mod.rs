//! Seeded Monte Carlo sweeps over receive SNR and allocation mode.
//!
//! Each `(SNR, realization)` pair is one work unit. Its scenario depends on
//! the realization index only, so every SNR point and every mode sees the
//! same targets; its bits and noise depend on both indices and are shared by
//! all modes. Work units run on a rayon pool and are reduced in index order,
//! so results do not depend on the number of threads.

mod config;
mod corruption;
mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_scenario, Scenario};
use crate::fec::{BpDecoder, LdpcCode};
use crate::pipeline::{CodewordStats, FrameResult, FrameRunner, FrameSeeds};
use crate::planner::AllocationMode;
use crate::radar::{ca_cfar, match_detections, periodogram, target_snr, Periodogram};
use crate::{Error, Result};

pub use config::{DecoderConfig, FrameConfig, RadarConfig, SnrGrid, SweepConfig, OUTPUT_DIR_ENV};
pub use corruption::{corruption_sweep, CorruptionPoint};
pub use output::{format_sig6, read_results, write_results, write_summary, CSV_HEADER};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const SCENARIO_TAG: u64 = 1;
const BITS_TAG: u64 = 2;
const NOISE_TAG: u64 = 3;

/// Scenario of realization `real_idx`, common to all SNR points and modes.
pub fn realization_scenario(cfg: &SweepConfig, real_idx: usize) -> Result<Scenario> {
    let num = cfg.frame.plan(AllocationMode::Hybrid)?.numerology;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, SCENARIO_TAG, real_idx as u64]));
    Ok(sample_scenario(&mut rng, &cfg.scenario, &num))
}

/// Bit and noise seeds of one work unit, common to all modes.
pub fn frame_seeds(master: u64, snr_idx: usize, real_idx: usize) -> FrameSeeds {
    FrameSeeds {
        bits: derive_seed(&[master, BITS_TAG, snr_idx as u64, real_idx as u64]),
        noise: derive_seed(&[master, NOISE_TAG, snr_idx as u64, real_idx as u64]),
    }
}

/// Radar metrics of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingOutcome {
    /// Linear target SNR.
    pub gamma: f64,
    pub detected: usize,
    pub missed: usize,
}

/// Periodogram, target SNR and detection matching for one frame.
pub fn evaluate_sensing(
    frame: &FrameResult,
    scenario: &Scenario,
    radar: &RadarConfig,
    cfar: &crate::radar::CfarConfig,
) -> Result<(Periodogram, SensingOutcome)> {
    let p = periodogram(&frame.h_hat, (radar.pad_range, radar.pad_doppler), frame.csi_spacing)?;
    let truth = p.truth_bins(&scenario.truth());
    let gamma = target_snr(&p, &truth)?.gamma;
    let detections = ca_cfar(&p, cfar)?;
    let m = match_detections(&p, &detections, &truth, radar.match_tolerance);
    Ok((
        p,
        SensingOutcome {
            gamma,
            detected: m.detected,
            missed: m.missed,
        },
    ))
}

/// Everything measured on one frame of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub mode: AllocationMode,
    pub sensing: SensingOutcome,
    pub symbol_errors: usize,
    pub data_symbols: usize,
    pub ser: Option<f64>,
    pub stream_s: Option<CodewordStats>,
    pub stream_r: Option<CodewordStats>,
}

/// Shared state of a sweep: the code, one frame runner and the SNR grid.
pub struct Sweep<'c> {
    cfg: SweepConfig,
    runner: FrameRunner<'c>,
    snrs: Vec<f64>,
}

impl<'c> Sweep<'c> {
    pub fn new(cfg: &SweepConfig, code: &'c LdpcCode) -> Result<Self> {
        cfg.validate()?;
        let plan = cfg.frame.plan(AllocationMode::Hybrid)?;
        let decoder = BpDecoder::new(code, cfg.decoder.algorithm, cfg.decoder.max_iterations);
        let mut runner = FrameRunner::new(&plan, code, decoder)?;
        runner.remodulation = cfg.decoder.remodulation;
        Ok(Sweep {
            cfg: cfg.clone(),
            runner,
            snrs: cfg.snr.points()?,
        })
    }

    pub fn snr_points(&self) -> &[f64] {
        &self.snrs
    }

    pub fn runner(&self) -> &FrameRunner<'c> {
        &self.runner
    }

    /// All configured modes at one `(SNR, realization)` work unit.
    pub fn run_unit(&self, snr_idx: usize, real_idx: usize) -> Result<Vec<FrameOutcome>> {
        let scenario = realization_scenario(&self.cfg, real_idx)?;
        let seeds = frame_seeds(self.cfg.seed, snr_idx, real_idx);
        let snr = self.snrs[snr_idx];
        self.cfg
            .modes
            .iter()
            .map(|&mode| {
                let frame = self.runner.run(&scenario, mode, snr, seeds)?;
                let (_, sensing) = evaluate_sensing(&frame, &scenario, &self.cfg.radar, &self.cfg.cfar)?;
                Ok(FrameOutcome {
                    mode,
                    sensing,
                    symbol_errors: frame.symbol_errors,
                    data_symbols: frame.data_symbols,
                    ser: frame.ser(),
                    stream_s: frame.stream_s,
                    stream_r: frame.stream_r,
                })
            })
            .collect()
    }

    /// Runs every work unit and aggregates per `(SNR, mode)`, in SNR-then-mode order.
    pub fn run(&self) -> Result<Vec<SweepRecord>> {
        let n_real = self.cfg.realizations;
        let units: Vec<(usize, usize)> = (0..self.snrs.len())
            .flat_map(|s| (0..n_real).map(move |r| (s, r)))
            .collect();
        let work =
            || -> Result<Vec<Vec<FrameOutcome>>> { units.par_iter().map(|&(s, r)| self.run_unit(s, r)).collect() };
        let outcomes = match self.cfg.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(work)?,
            None => work()?,
        };

        let mut records = Vec::with_capacity(self.snrs.len() * self.cfg.modes.len());
        for (s, &snr) in self.snrs.iter().enumerate() {
            let unit_outcomes = &outcomes[s * n_real..(s + 1) * n_real];
            for (mi, &mode) in self.cfg.modes.iter().enumerate() {
                let per_mode: Vec<&FrameOutcome> = unit_outcomes.iter().map(|u| &u[mi]).collect();
                records.push(SweepRecord::aggregate(snr, mode, &per_mode));
            }
        }
        Ok(records)
    }
}

/// Runs a whole sweep with the shipped code.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    Sweep::new(cfg, LdpcCode::shipped())?.run()
}

/// Aggregated metrics at one `(SNR, mode)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub mode: AllocationMode,
    /// Mean of the per-realization linear target SNRs, in dB.
    pub gamma_tar_db: f64,
    /// 95 % half-width of the linear mean, mapped to dB above the mean.
    pub gamma_tar_ci_db: f64,
    pub p_md: f64,
    pub p_md_ci: f64,
    pub ser: Option<f64>,
    pub ser_ci: Option<f64>,
    pub bler_s: Option<f64>,
    pub bler_r: Option<f64>,
    pub n_real: usize,
    pub codewords_s: usize,
    pub codewords_r: usize,
}

/// Mean and 95 % normal-approximation half-width.
fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

impl SweepRecord {
    pub fn aggregate(snr_db: f64, mode: AllocationMode, outcomes: &[&FrameOutcome]) -> Self {
        let gammas: Vec<f64> = outcomes.iter().map(|o| o.sensing.gamma).collect();
        let (gamma, gamma_hw) = mean_ci(&gammas);
        let per_real_md: Vec<f64> = outcomes
            .iter()
            .map(|o| o.sensing.missed as f64 / (o.sensing.missed + o.sensing.detected) as f64)
            .collect();
        let (_, md_hw) = mean_ci(&per_real_md);
        let missed: usize = outcomes.iter().map(|o| o.sensing.missed).sum();
        let targets: usize = outcomes.iter().map(|o| o.sensing.missed + o.sensing.detected).sum();
        let sers: Vec<f64> = outcomes.iter().filter_map(|o| o.ser).collect();
        let (ser, ser_ci) = if sers.len() == outcomes.len() && !sers.is_empty() {
            let (m, hw) = mean_ci(&sers);
            (Some(m), Some(hw))
        } else {
            (None, None)
        };
        let pool = |pick: fn(&FrameOutcome) -> Option<CodewordStats>| {
            let stats: Vec<CodewordStats> = outcomes.iter().filter_map(|o| pick(o)).collect();
            let total: usize = stats.iter().map(|s| s.total).sum();
            let failed: usize = stats.iter().map(|s| s.failed).sum();
            ((total > 0).then(|| failed as f64 / total as f64), total)
        };
        let (bler_s, codewords_s) = pool(|o| o.stream_s);
        let (bler_r, codewords_r) = pool(|o| o.stream_r);
        SweepRecord {
            snr_db,
            mode,
            gamma_tar_db: 10.0 * gamma.log10(),
            gamma_tar_ci_db: 10.0 * ((gamma + gamma_hw) / gamma).log10(),
            p_md: missed as f64 / targets as f64,
            p_md_ci: md_hw,
            ser,
            ser_ci,
            bler_s,
            bler_r,
            n_real: outcomes.len(),
            codewords_s,
            codewords_r,
        }
    }
}
