//! Sweep configuration, read from TOML.
//!
//! Every table and key is optional; missing values take the defaults of the
//! full-size reference frame. Example:
//!
//! ```toml
//! seed = 7
//! realizations = 20
//! modes = ["hybrid", "comm_centric", "genie_aided", "pilots_only"]
//!
//! [frame]
//! n_subcarriers = 192
//! n_symbols = 112
//!
//! [snr]
//! start = -2.0
//! stop = 14.0
//! step = 1.0
//!
//! [scenario]
//! target_loss_db = { lo = 34.0, hi = 40.0 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{Interval, ScenarioConfig};
use crate::fec::{BpAlgorithm, DEFAULT_MAX_ITERATIONS};
use crate::pipeline::Remodulation;
use crate::planner::{AllocationMode, FramePlan, Numerology};
use crate::radar::CfarConfig;
use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ISAC_SIM_OUT";

/// Frame numerology and allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    /// Hz.
    pub carrier_frequency: f64,
    /// Cyclic prefix as a fraction of the useful symbol.
    pub cp_fraction: f64,
    pub k_f: usize,
    pub k_t: usize,
    pub q_s: u32,
    pub q_r: u32,
    pub code_rate: f64,
    pub codeword_len: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            n_subcarriers: 792,
            n_symbols: 560,
            subcarrier_spacing: 120e3,
            carrier_frequency: 27.4e9,
            cp_fraction: 0.0,
            k_f: 4,
            k_t: 4,
            q_s: 2,
            q_r: 4,
            code_rate: 0.5,
            codeword_len: 1024,
        }
    }
}

impl FrameConfig {
    pub fn plan(&self, mode: AllocationMode) -> Result<FramePlan> {
        let plan = FramePlan {
            numerology: Numerology::new(
                self.n_subcarriers,
                self.n_symbols,
                self.subcarrier_spacing,
                self.carrier_frequency,
                self.cp_fraction,
            )?,
            k_f: self.k_f,
            k_t: self.k_t,
            q_s: self.q_s,
            q_r: self.q_r,
            code_rate: self.code_rate,
            codeword_len: self.codeword_len,
            mode,
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub algorithm: BpAlgorithm,
    pub max_iterations: usize,
    pub remodulation: Remodulation,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            algorithm: BpAlgorithm::SumProduct,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            remodulation: Remodulation::Codeword,
        }
    }
}

/// Receive-SNR grid in dB, `start..=stop` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn single(snr_db: f64) -> Self {
        SnrGrid {
            start: snr_db,
            stop: snr_db,
            step: 1.0,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!(
                "SNR grid needs finite start <= stop and step > 0, got {self:?}"
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

impl std::str::FromStr for SnrGrid {
    type Err = Error;

    /// Parses `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("SNR grid `{s}`: {e}")))?;
        match parts[..] {
            [start, stop, step] => Ok(SnrGrid { start, stop, step }),
            [single] => Ok(SnrGrid {
                start: single,
                stop: single,
                step: 1.0,
            }),
            _ => Err(Error::Config(format!("SNR grid `{s}`: expected start:stop:step"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    /// Zero-padding factor along range.
    pub pad_range: usize,
    /// Zero-padding factor along Doppler.
    pub pad_doppler: usize,
    /// Detection-to-target tolerance in native bins.
    pub match_tolerance: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            pad_range: 2,
            pad_doppler: 2,
            match_tolerance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub realizations: usize,
    pub modes: Vec<AllocationMode>,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    /// Output directory; `None` falls back to `$ISAC_SIM_OUT`, then `results`.
    pub output_dir: Option<PathBuf>,
    pub frame: FrameConfig,
    pub decoder: DecoderConfig,
    pub snr: SnrGrid,
    pub scenario: ScenarioConfig,
    pub radar: RadarConfig,
    pub cfar: CfarConfig,
}

impl Default for SweepConfig {
    /// Full-size reference frame, 50 realizations, -10..10 dB.
    fn default() -> Self {
        SweepConfig {
            seed: 1,
            realizations: 50,
            modes: AllocationMode::ALL.to_vec(),
            threads: None,
            output_dir: None,
            frame: FrameConfig::default(),
            decoder: DecoderConfig::default(),
            snr: SnrGrid {
                start: -10.0,
                stop: 10.0,
                step: 1.0,
            },
            scenario: ScenarioConfig::default(),
            radar: RadarConfig::default(),
            cfar: CfarConfig::default(),
        }
    }
}

impl SweepConfig {
    /// A 192 x 112 frame that sweeps in minutes on one core.
    ///
    /// Its processing gain is `10 log10(792 * 560 / (192 * 112))`, about
    /// 13.1 dB, below the full frame, so the target losses are lowered by
    /// 13 dB to keep targets at the same post-processing SNR. Excess range
    /// and Doppler are stretched by the grid shrink factors (792/192 and
    /// 560/112) so targets occupy the same native periodogram bins as in the
    /// full frame instead of collapsing into the reference main lobe.
    pub fn desk() -> Self {
        SweepConfig {
            realizations: 20,
            frame: FrameConfig {
                n_subcarriers: 192,
                n_symbols: 112,
                ..FrameConfig::default()
            },
            snr: SnrGrid {
                start: -2.0,
                stop: 14.0,
                step: 1.0,
            },
            scenario: ScenarioConfig {
                excess_range: Interval::new(30.0 * 4.125, 90.0 * 4.125),
                doppler: Interval::new(-1800.0 * 5.0, 1800.0 * 5.0),
                target_loss_db: Interval::new(34.0, 40.0),
                ..ScenarioConfig::default()
            },
            ..SweepConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be >= 1".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one mode is required".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if self.decoder.max_iterations == 0 {
            return Err(Error::Config("decoder needs at least one iteration".into()));
        }
        if self.radar.pad_range == 0 || self.radar.pad_doppler == 0 {
            return Err(Error::Config("zero-padding factors must be >= 1".into()));
        }
        if !(self.radar.match_tolerance >= 0.0) {
            return Err(Error::Config("match tolerance must be >= 0".into()));
        }
        if self.scenario.n_targets == 0 {
            return Err(Error::Config("sensing sweeps need at least one target".into()));
        }
        self.snr.points()?;
        self.scenario.validate()?;
        self.cfar.validate()?;
        self.frame.plan(AllocationMode::Hybrid)?;
        Ok(())
    }

    /// Configured directory, else `$ISAC_SIM_OUT`, else `results`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}
