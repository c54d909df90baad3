//! Hybrid resource allocation planning.
//!
//! Turns sensing requirements into sensing-grid spacings and burst dimensions,
//! accounts for spectral efficiency, and classifies every resource element of
//! a frame as sensing grid, regular data or known filler.

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::grid::scan_order;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Relative slack when taking the ceiling of a spacing ratio, so ratios that
/// are integers up to floating-point noise are not bumped to the next integer.
const CEIL_SLACK: f64 = 1e-9;

fn guarded_ceil(x: f64) -> f64 {
    (x * (1.0 - CEIL_SLACK)).ceil()
}

/// OFDM numerology of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    /// Number of subcarriers `N`.
    pub n_subcarriers: usize,
    /// Number of OFDM symbols per frame `M`.
    pub n_symbols: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// OFDM symbol duration in seconds, including any cyclic prefix.
    pub symbol_duration: f64,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
}

impl Numerology {
    /// Builds a numerology with `T0 = (1 + cp_fraction) / delta_f`.
    pub fn new(
        n_subcarriers: usize,
        n_symbols: usize,
        subcarrier_spacing: f64,
        carrier_frequency: f64,
        cp_fraction: f64,
    ) -> Result<Self> {
        let num = Numerology {
            n_subcarriers,
            n_symbols,
            subcarrier_spacing,
            symbol_duration: (1.0 + cp_fraction) / subcarrier_spacing,
            carrier_frequency,
        };
        num.validate()?;
        Ok(num)
    }

    /// The frame used in the reference scenario: 792 x 560 REs at 120 kHz
    /// spacing on a 27.4 GHz carrier, no cyclic prefix.
    pub fn reference() -> Self {
        Numerology::new(792, 560, 120e3, 27.4e9, 0.0).expect("valid reference numerology")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_symbols == 0 {
            return Err(Error::InvalidParameter(
                "frame must have at least one subcarrier and one symbol".into(),
            ));
        }
        if !(self.subcarrier_spacing > 0.0) || !(self.carrier_frequency > 0.0) {
            return Err(Error::InvalidParameter(
                "subcarrier spacing and carrier frequency must be positive".into(),
            ));
        }
        // T0 >= 1/delta_f, with a little room for rounding of the product.
        if !(self.symbol_duration * self.subcarrier_spacing >= 1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "symbol duration {} s is shorter than 1/delta_f",
                self.symbol_duration
            )));
        }
        Ok(())
    }

    pub fn n_re(&self) -> usize {
        self.n_subcarriers * self.n_symbols
    }

    /// Occupied bandwidth `N * delta_f`.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    /// Frame duration `M * T0`.
    pub fn frame_duration(&self) -> f64 {
        self.n_symbols as f64 * self.symbol_duration
    }
}

/// Sensing requirements driving the grid and burst dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingRequirements {
    /// Required unambiguous bistatic range, m.
    pub max_range: f64,
    /// Required unambiguous Doppler shift, Hz.
    pub max_doppler: f64,
    /// Required range resolution, m.
    pub range_resolution: f64,
    /// Required Doppler resolution, Hz.
    pub doppler_resolution: f64,
}

impl SensingRequirements {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.max_range,
            self.max_doppler,
            self.range_resolution,
            self.doppler_resolution,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if all_positive {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "sensing requirements must be finite and strictly positive".into(),
            ))
        }
    }
}

/// Sensing-grid spacings derived from unambiguity requirements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacings {
    pub k_f: usize,
    pub k_t: usize,
    /// Real-valued ratio before the ceiling, `c / (2 delta_f r'_max)`.
    pub k_f_exact: f64,
    /// Real-valued ratio before the ceiling, `1 / (2 T0 f'_D,max)`.
    pub k_t_exact: f64,
    /// The range requirement is looser than the full grid supports, spacing clamped to 1.
    pub range_clamped: bool,
    /// The Doppler requirement is looser than the full grid supports, spacing clamped to 1.
    pub doppler_clamped: bool,
}

/// Largest sensing-grid spacings that still meet the unambiguous range and
/// Doppler requirements.
pub fn compute_spacings(num: &Numerology, req: &SensingRequirements) -> Result<Spacings> {
    num.validate()?;
    req.validate()?;
    let k_f_exact = SPEED_OF_LIGHT / (2.0 * num.subcarrier_spacing * req.max_range);
    let k_t_exact = 1.0 / (2.0 * num.symbol_duration * req.max_doppler);
    let k_f = guarded_ceil(k_f_exact);
    let k_t = guarded_ceil(k_t_exact);
    if k_f > num.n_subcarriers as f64 {
        return Err(Error::Infeasible(format!(
            "unambiguous range {} m needs K_F = {} > N = {}",
            req.max_range, k_f, num.n_subcarriers
        )));
    }
    if k_t > num.n_symbols as f64 {
        return Err(Error::Infeasible(format!(
            "unambiguous Doppler {} Hz needs K_T = {} > M = {}",
            req.max_doppler, k_t, num.n_symbols
        )));
    }
    Ok(Spacings {
        k_f: (k_f as usize).max(1),
        k_t: (k_t as usize).max(1),
        k_f_exact,
        k_t_exact,
        range_clamped: k_f_exact < 1.0 - CEIL_SLACK,
        doppler_clamped: k_t_exact < 1.0 - CEIL_SLACK,
    })
}

/// Bandwidth and duration of the sensing burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    /// Hz
    pub bandwidth: f64,
    /// s
    pub duration: f64,
}

/// Burst dimensions meeting the range and Doppler resolution requirements.
pub fn compute_burst(req: &SensingRequirements) -> Result<Burst> {
    req.validate()?;
    Ok(Burst {
        bandwidth: SPEED_OF_LIGHT / (2.0 * req.range_resolution),
        duration: 1.0 / req.doppler_resolution,
    })
}

/// Fails if the burst does not fit into one frame of `num`.
pub fn check_burst_fits(num: &Numerology, burst: &Burst) -> Result<()> {
    // Same slack as the spacing ceiling: 95 MHz in 792 x 120 kHz must fit.
    if burst.bandwidth > num.bandwidth() * (1.0 + CEIL_SLACK) {
        return Err(Error::Infeasible(format!(
            "burst bandwidth {:.4e} Hz exceeds frame bandwidth {:.4e} Hz",
            burst.bandwidth,
            num.bandwidth()
        )));
    }
    if burst.duration > num.frame_duration() * (1.0 + CEIL_SLACK) {
        return Err(Error::Infeasible(format!(
            "burst duration {:.4e} s exceeds frame duration {:.4e} s",
            burst.duration,
            num.frame_duration()
        )));
    }
    Ok(())
}

/// Which symbols sit on the sensing grid and how the sensing receiver uses them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    /// Low-order coded pseudo-pilots on the grid, decoded before sensing.
    Hybrid,
    /// One high-order stream over the whole frame, decoded before sensing.
    CommCentric,
    /// Known QPSK pilots on the grid; sensing uses only those.
    PilotsOnly,
    /// Hybrid transmit frame, transmitted symbols known at the sensing receiver.
    GenieAided,
}

impl AllocationMode {
    pub const ALL: [AllocationMode; 4] = [
        AllocationMode::Hybrid,
        AllocationMode::CommCentric,
        AllocationMode::PilotsOnly,
        AllocationMode::GenieAided,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AllocationMode::Hybrid => "hybrid",
            AllocationMode::CommCentric => "comm_centric",
            AllocationMode::PilotsOnly => "pilots_only",
            AllocationMode::GenieAided => "genie_aided",
        }
    }

    /// Whether the mode places anything on the sensing grid.
    pub fn uses_sensing_grid(self) -> bool {
        !matches!(self, AllocationMode::CommCentric)
    }
}

impl fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AllocationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AllocationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown allocation mode `{s}`")))
    }
}

/// Numerology plus hybrid-allocation parameters for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub numerology: Numerology,
    pub k_f: usize,
    pub k_t: usize,
    /// Bits per symbol on sensing-grid REs.
    pub q_s: u32,
    /// Bits per symbol on regular REs.
    pub q_r: u32,
    pub code_rate: f64,
    /// LDPC codeword length in bits.
    pub codeword_len: usize,
    pub mode: AllocationMode,
}

impl FramePlan {
    /// Reference scenario: K_F = K_T = 4, QPSK on the grid, 16-QAM elsewhere,
    /// rate-1/2 codewords of 1024 bits.
    pub fn reference(mode: AllocationMode) -> Self {
        FramePlan {
            numerology: Numerology::reference(),
            k_f: 4,
            k_t: 4,
            q_s: 2,
            q_r: 4,
            code_rate: 0.5,
            codeword_len: 1024,
            mode,
        }
    }

    pub fn with_mode(mut self, mode: AllocationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.numerology.validate()?;
        let num = &self.numerology;
        if self.k_f == 0 || self.k_f > num.n_subcarriers {
            return Err(Error::InvalidParameter(format!(
                "K_F = {} outside [1, {}]",
                self.k_f, num.n_subcarriers
            )));
        }
        if self.k_t == 0 || self.k_t > num.n_symbols {
            return Err(Error::InvalidParameter(format!(
                "K_T = {} outside [1, {}]",
                self.k_t, num.n_symbols
            )));
        }
        for q in [self.q_s, self.q_r] {
            if q != 2 && q != 4 {
                return Err(Error::InvalidParameter(format!(
                    "modulation order {q} bits/symbol not supported (2 or 4)"
                )));
            }
        }
        if self.q_s > self.q_r {
            return Err(Error::InvalidParameter(
                "sensing-grid order must not exceed the regular order".into(),
            ));
        }
        if !(self.code_rate > 0.0 && self.code_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "code rate {} outside (0, 1]",
                self.code_rate
            )));
        }
        let k = self.info_len();
        if self.codeword_len == 0 || k == 0 || (k as f64 - self.codeword_len as f64 * self.code_rate).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "codeword length {} times rate {} is not a whole number of info bits",
                self.codeword_len, self.code_rate
            )));
        }
        Ok(())
    }

    /// Information bits per full codeword.
    pub fn info_len(&self) -> usize {
        (self.codeword_len as f64 * self.code_rate).round() as usize
    }

    /// Sensing-grid size from the ceiling formula, ignoring fillers.
    pub fn n_sensing_re(&self) -> usize {
        let num = &self.numerology;
        num.n_subcarriers.div_ceil(self.k_f) * num.n_symbols.div_ceil(self.k_t)
    }

    pub fn is_sensing_re(&self, subcarrier: usize, symbol: usize) -> bool {
        self.mode.uses_sensing_grid() && subcarrier.is_multiple_of(self.k_f) && symbol.is_multiple_of(self.k_t)
    }

    /// Dimensions of the pilots-only CSI matrix.
    pub fn decimated_shape(&self) -> (usize, usize) {
        (
            self.numerology.n_subcarriers.div_ceil(self.k_f),
            self.numerology.n_symbols.div_ceil(self.k_t),
        )
    }
}

/// Information bits per transmitted symbol averaged over the frame.
///
/// Comm-centric frames have no sensing grid; pilots carry no information.
pub fn spectral_efficiency(plan: &FramePlan) -> f64 {
    let n_re = plan.numerology.n_re() as f64;
    let n_s = plan.n_sensing_re() as f64;
    let (q_s, q_r) = (plan.q_s as f64, plan.q_r as f64);
    let bits = match plan.mode {
        AllocationMode::Hybrid | AllocationMode::GenieAided => n_s * q_s + (n_re - n_s) * q_r,
        AllocationMode::CommCentric => n_re * q_r,
        AllocationMode::PilotsOnly => (n_re - n_s) * q_r,
    };
    plan.code_rate * bits / n_re
}

/// Coherent processing gain `10 log10(usable REs)` available to sensing, dB.
pub fn processing_gain_db(plan: &FramePlan) -> f64 {
    let usable = match plan.mode {
        AllocationMode::PilotsOnly => plan.n_sensing_re(),
        _ => plan.numerology.n_re(),
    };
    10.0 * (usable as f64).log10()
}

/// One codeword's share of a stream: `info_len` information bits, of which
/// `coded_len` coded bits are transmitted. A shortened codeword has
/// `info_len < k` and omits its known zero information bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub info_len: usize,
    pub coded_len: usize,
}

/// Splits a stream of `capacity_bits` into full codewords of length `n`
/// (with `k` info bits) plus at most one shortened codeword. Returns the
/// segments and the number of bits left over for filler, which is nonzero
/// only when the remainder cannot hold the `n - k` parity bits plus at
/// least one information bit.
pub fn segment_stream(capacity_bits: usize, n: usize, k: usize) -> (Vec<Segment>, usize) {
    let full = capacity_bits / n;
    let rem = capacity_bits % n;
    let mut segments = vec![
        Segment {
            info_len: k,
            coded_len: n
        };
        full
    ];
    let parity = n - k;
    if rem > parity {
        segments.push(Segment {
            info_len: rem - parity,
            coded_len: rem,
        });
        (segments, 0)
    } else {
        (segments, rem)
    }
}

/// Role of a single resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReClass {
    SensingGrid,
    Regular,
    Filler,
}

/// Classification of every RE in the frame, with the per-class positions
/// in frequency-major scan order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReMap {
    pub classification: Array2<ReClass>,
    /// Sensing-grid REs left after filler assignment.
    pub n_sensing: usize,
    pub sensing: Vec<(usize, usize)>,
    pub regular: Vec<(usize, usize)>,
    pub filler: Vec<(usize, usize)>,
    pub mode: AllocationMode,
}

impl ReMap {
    pub fn shape(&self) -> (usize, usize) {
        self.classification.dim()
    }

    pub fn class_at(&self, subcarrier: usize, symbol: usize) -> ReClass {
        self.classification[[subcarrier, symbol]]
    }
}

/// Classifies every RE of the frame.
///
/// The sensing grid is anchored at (0, 0) with periods (K_F, K_T). In coded
/// streams, trailing REs whose bits cannot form a (shortened) codeword become
/// filler REs carrying known symbols; see [`segment_stream`]. Pilots are not
/// coded, so the pilots-only grid never receives filler.
pub fn build_re_map(plan: &FramePlan) -> Result<ReMap> {
    plan.validate()?;
    let num = &plan.numerology;
    let (n_sub, n_sym) = (num.n_subcarriers, num.n_symbols);
    let mut classification = Array2::from_elem((n_sub, n_sym), ReClass::Regular);
    let mut sensing = Vec::new();
    let mut regular = Vec::new();
    for (n, m) in scan_order(n_sub, n_sym) {
        if plan.is_sensing_re(n, m) {
            classification[[n, m]] = ReClass::SensingGrid;
            sensing.push((n, m));
        } else {
            regular.push((n, m));
        }
    }

    let n = plan.codeword_len;
    let k = plan.info_len();
    let mut filler = Vec::new();
    let mut trim = |positions: &mut Vec<(usize, usize)>, q: u32| {
        let (_, spare_bits) = segment_stream(positions.len() * q as usize, n, k);
        let spare_re = spare_bits / q as usize;
        let cut = positions.len() - spare_re;
        filler.extend(positions.drain(cut..));
    };
    if matches!(plan.mode, AllocationMode::Hybrid | AllocationMode::GenieAided) {
        trim(&mut sensing, plan.q_s);
    }
    trim(&mut regular, plan.q_r);
    filler.sort_by_key(|&(n, m)| (m, n));
    for &(n, m) in &filler {
        classification[[n, m]] = ReClass::Filler;
    }

    Ok(ReMap {
        classification,
        n_sensing: sensing.len(),
        sensing,
        regular,
        filler,
        mode: plan.mode,
    })
}

/// Human-readable plan summary covering all four modes.
pub fn plan_summary(plan: &FramePlan) -> Result<String> {
    use std::fmt::Write;

    plan.validate()?;
    let num = &plan.numerology;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "frame: N = {} subcarriers x M = {} symbols, delta_f = {} Hz, T0 = {:.6e} s, f_c = {:.4e} Hz",
        num.n_subcarriers, num.n_symbols, num.subcarrier_spacing, num.symbol_duration, num.carrier_frequency
    );
    let _ = writeln!(
        s,
        "grid: K_F = {}, K_T = {}, Q_s = {}, Q_r = {}, R = {}, codeword length {}",
        plan.k_f, plan.k_t, plan.q_s, plan.q_r, plan.code_rate, plan.codeword_len
    );
    let _ = writeln!(s, "sensing-grid REs (ceiling formula): {}", plan.n_sensing_re());

    let planner_range = SPEED_OF_LIGHT / (2.0 * plan.k_f as f64 * num.subcarrier_spacing);
    let steering_range = SPEED_OF_LIGHT / (plan.k_f as f64 * num.subcarrier_spacing);
    let planner_doppler = 1.0 / (2.0 * plan.k_t as f64 * num.symbol_duration);
    let _ = writeln!(
        s,
        "unambiguous range: {planner_range:.2} m (c/(2 K_F delta_f), planning convention); \
         the steering vector itself wraps at c/(K_F delta_f) = {steering_range:.2} m"
    );
    let _ = writeln!(s, "unambiguous Doppler: +/-{planner_doppler:.1} Hz (1/(2 K_T T0))");
    let _ = writeln!(
        s,
        "{:<14} {:>8} {:>10} {:>12} {:>12}",
        "mode", "eta", "N_s(map)", "filler REs", "proc. gain"
    );
    for mode in AllocationMode::ALL {
        let p = plan.with_mode(mode);
        let map = build_re_map(&p)?;
        let _ = writeln!(
            s,
            "{:<14} {:>8.4} {:>10} {:>12} {:>9.2} dB",
            mode.as_str(),
            spectral_efficiency(&p),
            map.n_sensing,
            map.filler.len(),
            processing_gain_db(&p)
        );
    }
    Ok(s)
}
