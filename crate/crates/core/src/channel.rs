//! Bistatic multipath channel in the discrete frequency domain.
//!
//! Every path contributes the rank-one matrix `alpha * a(r) b(f_D)^T`, with
//! `a_n(r) = exp(-j 2 pi n delta_f r / c)` over subcarriers and
//! `b_m(f_D) = exp(+j 2 pi m T0 f_D)` over symbols. The received frame is
//! the element-wise product of the transmitted frame and the channel plus
//! circular complex white Gaussian noise.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Zip;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::grid::FrameGrid;
use crate::planner::Numerology;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Range steering vector over `n_sub` subcarriers.
pub fn steering_range(range: f64, n_sub: usize, subcarrier_spacing: f64) -> Vec<Complex64> {
    let step = -2.0 * PI * subcarrier_spacing * range / SPEED_OF_LIGHT;
    (0..n_sub)
        .map(|n| Complex64::from_polar(1.0, step * n as f64))
        .collect()
}

/// Doppler steering vector over `n_sym` OFDM symbols. Note the positive sign.
pub fn steering_doppler(doppler: f64, n_sym: usize, symbol_duration: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * symbol_duration * doppler;
    (0..n_sym)
        .map(|m| Complex64::from_polar(1.0, step * m as f64))
        .collect()
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// Complex amplitude, path loss included.
    pub gain: Complex64,
    /// Bistatic range, m.
    pub range: f64,
    /// Bistatic Doppler shift, Hz.
    pub doppler: f64,
    pub is_reference: bool,
}

impl PathParams {
    /// The rank-one channel contribution of this path alone.
    pub fn cfr(&self, num: &Numerology) -> FrameGrid {
        let a = steering_range(self.range, num.n_subcarriers, num.subcarrier_spacing);
        let b = steering_doppler(self.doppler, num.n_symbols, num.symbol_duration);
        FrameGrid::from_shape_fn((num.n_subcarriers, num.n_symbols), |(n, m)| self.gain * a[n] * b[m])
    }
}

/// A reference (dominant) path plus the target paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub reference: PathParams,
    pub targets: Vec<PathParams>,
}

/// Position of a target relative to the reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetTruth {
    pub excess_range: f64,
    pub differential_doppler: f64,
    /// `|alpha_p / alpha_0|`
    pub relative_amplitude: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !self.reference.is_reference || self.targets.iter().any(|t| t.is_reference) {
            return Err(Error::InvalidParameter("exactly one path must be the reference".into()));
        }
        if std::iter::once(&self.reference)
            .chain(&self.targets)
            .any(|p| !(p.gain.norm() > 0.0))
        {
            return Err(Error::InvalidParameter("path gains must be nonzero".into()));
        }
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathParams> {
        std::iter::once(&self.reference).chain(&self.targets)
    }

    pub fn truth(&self) -> Vec<TargetTruth> {
        let r = &self.reference;
        self.targets
            .iter()
            .map(|t| TargetTruth {
                excess_range: t.range - r.range,
                differential_doppler: t.doppler - r.doppler,
                relative_amplitude: t.gain.norm() / r.gain.norm(),
            })
            .collect()
    }

    /// Keeps only the reference path.
    pub fn reference_only(&self) -> Scenario {
        Scenario {
            reference: self.reference,
            targets: Vec::new(),
        }
    }
}

/// Channel frequency response: the sum of all path contributions.
pub fn build_cfr(scenario: &Scenario, num: &Numerology) -> FrameGrid {
    let mut h = FrameGrid::zeros((num.n_subcarriers, num.n_symbols));
    for path in scenario.paths() {
        let a = steering_range(path.range, num.n_subcarriers, num.subcarrier_spacing);
        let b = steering_doppler(path.doppler, num.n_symbols, num.symbol_duration);
        for ((n, m), v) in h.indexed_iter_mut() {
            *v += path.gain * a[n] * b[m];
        }
    }
    h
}

/// Per-RE noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub sigma2: f64,
}

impl NoiseConfig {
    /// Noise giving per-RE SNR `|alpha_0|^2 / sigma^2` (unit-power symbols)
    /// on the dominant path.
    pub fn from_receive_snr_db(snr_db: f64, reference_gain: Complex64) -> Self {
        NoiseConfig {
            sigma2: reference_gain.norm_sqr() / 10f64.powf(snr_db / 10.0),
        }
    }
}

/// Circular complex Gaussian noise, variance `sigma2` per element.
pub fn awgn(shape: (usize, usize), sigma2: f64, rng: &mut impl Rng) -> FrameGrid {
    let std = (sigma2 / 2.0).sqrt();
    FrameGrid::from_shape_simple_fn(shape, || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * std, im * std)
    })
}

/// `Y = X (.) H + Z`, element-wise.
pub fn apply_channel_and_noise(
    x: &FrameGrid,
    h: &FrameGrid,
    noise: NoiseConfig,
    rng: &mut impl Rng,
) -> Result<FrameGrid> {
    if x.dim() != h.dim() {
        return Err(Error::ShapeMismatch(format!(
            "frame {:?} vs channel {:?}",
            x.dim(),
            h.dim()
        )));
    }
    if !(noise.sigma2 >= 0.0) {
        return Err(Error::InvalidParameter("noise variance must be >= 0".into()));
    }
    let mut y = if noise.sigma2 > 0.0 {
        awgn(x.dim(), noise.sigma2, rng)
    } else {
        FrameGrid::zeros(x.dim())
    };
    Zip::from(&mut y).and(x).and(h).for_each(|y, x, h| *y += x * h);
    Ok(y)
}

/// Closed interval `[lo, hi]` of a uniform draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

/// Distribution of random scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_targets: usize,
    /// Bistatic range of the reference path, m.
    pub reference_range: Interval,
    /// Target range minus reference range, m.
    pub excess_range: Interval,
    /// Doppler shift of every path, Hz.
    pub doppler: Interval,
    /// Extra path loss of each target over the reference path, dB.
    pub target_loss_db: Interval,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_targets: 5,
            reference_range: Interval::new(200.0, 300.0),
            excess_range: Interval::new(30.0, 90.0),
            doppler: Interval::new(-1800.0, 1800.0),
            target_loss_db: Interval::new(47.0, 53.0),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [
            ("reference_range", self.reference_range),
            ("excess_range", self.excess_range),
            ("doppler", self.doppler),
            ("target_loss_db", self.target_loss_db),
        ] {
            if !(iv.lo <= iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(Error::Config(format!("{name}: need finite lo <= hi")));
            }
        }
        if !(self.reference_range.lo > 0.0) || !(self.excess_range.lo > 0.0) {
            return Err(Error::Config("ranges and excess ranges must be positive".into()));
        }
        Ok(())
    }
}

/// Free-space amplitude `c / (4 pi r f_c)` of a path of length `range`.
pub fn free_space_amplitude(range: f64, carrier_frequency: f64) -> f64 {
    SPEED_OF_LIGHT / (4.0 * PI * range * carrier_frequency)
}

fn random_phase(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

/// Draws a random scenario: reference path with free-space gain, targets
/// attenuated by `target_loss_db` relative to it, all phases uniform.
pub fn sample_scenario(rng: &mut impl Rng, cfg: &ScenarioConfig, num: &Numerology) -> Scenario {
    let r0 = cfg.reference_range.sample(rng);
    let a0 = free_space_amplitude(r0, num.carrier_frequency);
    let reference = PathParams {
        gain: a0 * random_phase(rng),
        range: r0,
        doppler: cfg.doppler.sample(rng),
        is_reference: true,
    };
    let targets = (0..cfg.n_targets)
        .map(|_| {
            let excess = cfg.excess_range.sample(rng);
            let loss_db = cfg.target_loss_db.sample(rng);
            PathParams {
                gain: a0 * 10f64.powf(-loss_db / 20.0) * random_phase(rng),
                range: r0 + excess,
                doppler: cfg.doppler.sample(rng),
                is_reference: false,
            }
        })
        .collect();
    Scenario { reference, targets }
}

/// One path in a scenario override file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub range_m: f64,
    pub doppler_hz: f64,
    /// Linear amplitude `|alpha|`; defaults to free-space loss for the
    /// reference and to `reference * 10^(-loss_db/20)` for targets.
    pub amplitude: Option<f64>,
    /// Target loss relative to the reference, dB (ignored if `amplitude` is given).
    pub loss_db: Option<f64>,
    #[serde(default)]
    pub phase_rad: f64,
}

/// Scenario override file: pins every path parameter.
///
/// ```toml
/// [reference]
/// range_m = 250.0
/// doppler_hz = 0.0
///
/// [[targets]]
/// range_m = 310.0
/// doppler_hz = 600.0
/// loss_db = 47.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub reference: PathSpec,
    #[serde(default)]
    pub targets: Vec<PathSpec>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_scenario(&self, num: &Numerology) -> Result<Scenario> {
        let r = &self.reference;
        let a0 = r
            .amplitude
            .unwrap_or_else(|| free_space_amplitude(r.range_m, num.carrier_frequency));
        let reference = PathParams {
            gain: Complex64::from_polar(a0, r.phase_rad),
            range: r.range_m,
            doppler: r.doppler_hz,
            is_reference: true,
        };
        let targets = self
            .targets
            .iter()
            .map(|t| {
                let amp = match (t.amplitude, t.loss_db) {
                    (Some(a), _) => a,
                    (None, Some(l)) => a0 * 10f64.powf(-l / 20.0),
                    (None, None) => return Err(Error::Config("each target needs `amplitude` or `loss_db`".into())),
                };
                Ok(PathParams {
                    gain: Complex64::from_polar(amp, t.phase_rad),
                    range: t.range_m,
                    doppler: t.doppler_hz,
                    is_reference: false,
                })
            })
            .collect::<Result<_>>()?;
        let scenario = Scenario { reference, targets };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Numerology {
        Numerology::new(16, 16, 120e3, 27.4e9, 0.0).unwrap()
    }

    fn path(gain: Complex64, range: f64, doppler: f64, is_reference: bool) -> PathParams {
        PathParams {
            gain,
            range,
            doppler,
            is_reference,
        }
    }

    #[test]
    fn steering_vectors_wrap_and_have_unit_modulus() {
        for v in steering_range(0.0, 32, 120e3) {
            assert_eq!(v, Complex64::new(1.0, 0.0));
        }
        for v in steering_range(SPEED_OF_LIGHT / 120e3, 32, 120e3) {
            assert!((v - 1.0).norm() < 1e-9);
        }
        for v in steering_doppler(1.0 / 8.333e-6, 32, 8.333e-6) {
            assert!((v - 1.0).norm() < 1e-9);
        }
        for v in steering_range(123.4, 64, 120e3)
            .into_iter()
            .chain(steering_doppler(777.0, 64, 8.3e-6))
        {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        // Opposite sign conventions.
        assert!(steering_range(100.0, 2, 120e3)[1].im < 0.0);
        assert!(steering_doppler(100.0, 2, 8.3e-6)[1].im > 0.0);
    }

    #[test]
    fn single_static_path_is_all_ones() {
        let s = Scenario {
            reference: path(Complex64::new(1.0, 0.0), 0.0, 0.0, true),
            targets: vec![],
        };
        let h = build_cfr(&s, &small());
        assert!(h.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn cfr_is_linear_in_paths() {
        let num = small();
        let a = path(Complex64::new(0.3, -0.2), 250.0, 400.0, true);
        let b = path(Complex64::new(0.01, 0.02), 317.0, -1200.0, false);
        let both = build_cfr(
            &Scenario {
                reference: a,
                targets: vec![b],
            },
            &num,
        );
        let sum = a.cfr(&num) + b.cfr(&num);
        assert!(both.iter().zip(sum.iter()).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn single_path_energy_and_rank_one() {
        let num = small();
        let p = path(Complex64::from_polar(1.0, 0.7), 271.3, 913.0, true);
        let h = p.cfr(&num);
        let energy: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        assert!((energy - 256.0).abs() < 1e-9);
        // Rank one: every 2 x 2 minor vanishes.
        for n in 1..16 {
            for m in 1..16 {
                let minor = h[[0, 0]] * h[[n, m]] - h[[0, m]] * h[[n, 0]];
                assert!(minor.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_channel_is_hadamard_product() {
        let num = small();
        let x = FrameGrid::from_shape_fn((16, 16), |(n, m)| Complex64::new(n as f64, m as f64));
        let ones = FrameGrid::from_elem((16, 16), Complex64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = apply_channel_and_noise(&x, &ones, NoiseConfig { sigma2: 0.0 }, &mut rng).unwrap();
        assert_eq!(y, x);
        let h = path(Complex64::new(0.5, 0.5), 90.0, 10.0, true).cfr(&num);
        let y = apply_channel_and_noise(&x, &h, NoiseConfig { sigma2: 0.0 }, &mut rng).unwrap();
        assert_eq!(y, &x * &h);
        let bad = FrameGrid::zeros((4, 4));
        assert!(apply_channel_and_noise(&bad, &h, NoiseConfig { sigma2: 0.0 }, &mut rng).is_err());
    }

    #[test]
    fn noise_variance_matches_configuration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let shape = (128, 128);
        let ones = FrameGrid::from_elem(shape, Complex64::new(1.0, 0.0));
        let y = apply_channel_and_noise(&ones, &ones, NoiseConfig { sigma2: 0.5 }, &mut rng).unwrap();
        let count = (shape.0 * shape.1) as f64;
        let var = y.iter().map(|v| (v - 1.0).norm_sqr()).sum::<f64>() / count;
        // |Z|^2 is exponential with mean 0.5: standard error 0.5 / sqrt(count).
        assert!((var - 0.5).abs() < 3.0 * 0.5 / count.sqrt(), "{var}");

        let zeros = FrameGrid::zeros(shape);
        let y = apply_channel_and_noise(&zeros, &ones, NoiseConfig { sigma2: 2.0 }, &mut rng).unwrap();
        let var = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / count;
        assert!((var - 2.0).abs() < 3.0 * 2.0 / count.sqrt(), "{var}");
    }

    #[test]
    fn scenario_draws_respect_bounds() {
        let cfg = ScenarioConfig::default();
        let num = Numerology::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let s = sample_scenario(&mut rng, &cfg, &num);
            assert!((200.0..=300.0).contains(&s.reference.range));
            assert_eq!(s.targets.len(), 5);
            for (t, truth) in s.targets.iter().zip(s.truth()) {
                assert!((30.0..=90.0).contains(&truth.excess_range));
                assert!((-1800.0..=1800.0).contains(&t.doppler));
                let loss_db = -20.0 * truth.relative_amplitude.log10();
                assert!((47.0 - 1e-9..=53.0 + 1e-9).contains(&loss_db));
            }
        }
    }

    #[test]
    fn degenerate_config_is_deterministic_up_to_phase() {
        let cfg = ScenarioConfig {
            n_targets: 1,
            reference_range: Interval::point(250.0),
            excess_range: Interval::point(60.0),
            doppler: Interval::point(0.0),
            target_loss_db: Interval::point(50.0),
        };
        let num = Numerology::reference();
        let a = sample_scenario(&mut ChaCha8Rng::seed_from_u64(1), &cfg, &num);
        let b = sample_scenario(&mut ChaCha8Rng::seed_from_u64(2), &cfg, &num);
        assert_eq!(a.targets[0].range, 310.0);
        assert_eq!(a.reference.gain.norm(), b.reference.gain.norm());
        assert!((a.truth()[0].relative_amplitude - 10f64.powf(-2.5)).abs() < 1e-15);
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let cfg = ScenarioConfig::default();
        let num = Numerology::reference();
        let a = sample_scenario(&mut ChaCha8Rng::seed_from_u64(77), &cfg, &num);
        let b = sample_scenario(&mut ChaCha8Rng::seed_from_u64(77), &cfg, &num);
        assert_eq!(a, b);
    }

    #[test]
    fn snr_sets_noise_relative_to_reference() {
        let g = Complex64::new(3e-5, 4e-5);
        let n = NoiseConfig::from_receive_snr_db(10.0, g);
        assert!((g.norm_sqr() / n.sigma2 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn override_file_parses() {
        let text = r#"
            [reference]
            range_m = 250.0
            doppler_hz = 100.0

            [[targets]]
            range_m = 310.0
            doppler_hz = 700.0
            loss_db = 40.0
            phase_rad = 1.0
        "#;
        let file: ScenarioFile = toml::from_str(text).unwrap();
        let s = file.to_scenario(&Numerology::reference()).unwrap();
        assert_eq!(s.truth()[0].excess_range, 60.0);
        assert_eq!(s.truth()[0].differential_doppler, 600.0);
        assert!((s.truth()[0].relative_amplitude - 0.01).abs() < 1e-12);

        let missing: ScenarioFile = toml::from_str(
            "[reference]\nrange_m = 1.0\ndoppler_hz = 0.0\n[[targets]]\nrange_m = 2.0\ndoppler_hz = 0.0\n",
        )
        .unwrap();
        assert!(missing.to_scenario(&Numerology::reference()).is_err());
    }
}
