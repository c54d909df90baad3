use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_isac::channel::ScenarioFile;
use hybrid_isac::fec::LdpcCode;
use hybrid_isac::harness::{
    evaluate_sensing, frame_seeds, realization_scenario, run_sweep, write_results, write_summary, SnrGrid, Sweep,
    SweepConfig, OUTPUT_DIR_ENV,
};
use hybrid_isac::planner::{
    check_burst_fits, compute_burst, compute_spacings, plan_summary, AllocationMode, SensingRequirements,
};
use hybrid_isac::radar::ca_cfar;
use hybrid_isac::selfcheck;

#[derive(Parser)]
#[command(name = "isac-sim", version, about = "Bistatic OFDM sensing link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the full-size reference frame.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Start from the desk-size preset instead of the full-size defaults.
    #[arg(long)]
    desk: bool,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated modes: hybrid, comm_centric, pilots_only, genie_aided.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<AllocationMode>>,
    /// SNR grid in dB as start:stop:step, or a single value.
    #[arg(long)]
    snr: Option<SnrGrid>,
    /// Realizations per SNR point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory [default: config value, then $ISAC_SIM_OUT, then ./results].
    #[arg(short, long, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(short = 'j', long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> hybrid_isac::Result<SweepConfig> {
        let mut cfg = match (&self.config, self.desk) {
            (Some(path), _) => SweepConfig::load(path)?,
            (None, true) => SweepConfig::desk(),
            (None, false) => SweepConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.modes {
            cfg.modes = m.clone();
        }
        if let Some(g) = self.snr {
            cfg.snr = g;
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the resource plan of a configuration, optionally deriving the
    /// grid spacings from sensing requirements.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Required unambiguous range, m.
        #[arg(long, requires = "max_doppler")]
        max_range: Option<f64>,
        /// Required unambiguous Doppler, Hz.
        #[arg(long, requires = "max_range")]
        max_doppler: Option<f64>,
        /// Required range resolution, m.
        #[arg(long, default_value_t = 1.578)]
        range_resolution: f64,
        /// Required Doppler resolution, Hz.
        #[arg(long, default_value_t = 214.3)]
        doppler_resolution: f64,
    },
    /// Run a Monte Carlo sweep and write sweep.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Process one frame per mode and dump its periodogram.
    Frame {
        #[command(flatten)]
        common: Common,
        /// Realization index whose random scenario is used.
        #[arg(long, default_value_t = 0)]
        realization: usize,
        /// Scenario override file pinning every path.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Validate,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> hybrid_isac::Result<ExitCode> {
    match cmd {
        Command::Plan {
            common,
            max_range,
            max_doppler,
            range_resolution,
            doppler_resolution,
        } => {
            let mut cfg = common.config()?;
            if let (Some(max_range), Some(max_doppler)) = (max_range, max_doppler) {
                let req = SensingRequirements {
                    max_range,
                    max_doppler,
                    range_resolution,
                    doppler_resolution,
                };
                let num = cfg.frame.plan(AllocationMode::Hybrid)?.numerology;
                let s = compute_spacings(&num, &req)?;
                let burst = compute_burst(&req)?;
                check_burst_fits(&num, &burst)?;
                println!(
                    "spacings: K_F = {} ({:.4}), K_T = {} ({:.4}){}",
                    s.k_f,
                    s.k_f_exact,
                    s.k_t,
                    s.k_t_exact,
                    if s.range_clamped || s.doppler_clamped {
                        ", clamped to 1"
                    } else {
                        ""
                    }
                );
                println!("burst: {:.4e} Hz x {:.4e} s", burst.bandwidth, burst.duration);
                cfg.frame.k_f = s.k_f;
                cfg.frame.k_t = s.k_t;
            }
            print!("{}", plan_summary(&cfg.frame.plan(AllocationMode::Hybrid)?)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { common } => {
            let cfg = common.config()?;
            let dir = cfg.resolved_output_dir();
            create_dir(&dir)?;
            let records = run_sweep(&cfg)?;
            write_results(&records, dir.join("sweep.csv"))?;
            write_summary(&cfg, &records, dir.join("summary.json"))?;
            eprintln!("{} records written to {}", records.len(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Frame {
            common,
            realization,
            scenario,
        } => {
            let cfg = common.config()?;
            let dir = cfg.resolved_output_dir();
            create_dir(&dir)?;
            let sweep = Sweep::new(&cfg, LdpcCode::shipped())?;
            let num = sweep.runner().plan().numerology;
            let scenario = match scenario {
                Some(path) => ScenarioFile::load(path)?.to_scenario(&num)?,
                None => realization_scenario(&cfg, realization)?,
            };
            let snr = sweep.snr_points()[0];
            let seeds = frame_seeds(cfg.seed, 0, realization);
            println!("SNR {snr} dB, targets (excess range m, differential Doppler Hz, relative loss dB):");
            for t in scenario.truth() {
                println!(
                    "  {:8.2} {:9.1} {:7.2}",
                    t.excess_range,
                    t.differential_doppler,
                    -20.0 * t.relative_amplitude.log10()
                );
            }
            for &mode in &cfg.modes {
                let frame = sweep.runner().run(&scenario, mode, snr, seeds)?;
                let (p, sensing) = evaluate_sensing(&frame, &scenario, &cfg.radar, &cfg.cfar)?;
                let path = dir.join(format!("periodogram_{mode}.txt"));
                p.write_text(&path)?;
                let ser = frame.ser().map_or("NA".to_string(), |s| format!("{s:.4}"));
                println!(
                    "{mode}: gamma_tar {:.2} dB, detected {}/{}, SER {ser} -> {}",
                    10.0 * sensing.gamma.log10(),
                    sensing.detected,
                    sensing.detected + sensing.missed,
                    path.display()
                );
                for d in ca_cfar(&p, &cfg.cfar)?.iter().take(10) {
                    println!(
                        "    peak {:8.2} m {:9.1} Hz  {:.3e}",
                        d.excess_range, d.doppler, d.power
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let checks = selfcheck::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn create_dir(dir: &Path) -> hybrid_isac::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| hybrid_isac::Error::Config(format!("{}: {e}", dir.display())))
}
