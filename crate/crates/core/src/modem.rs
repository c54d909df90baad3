//! Gray-labelled QPSK and 16-QAM, soft demapping and RE-grid (de)serialization.
//!
//! Labels are read most significant bit first. QPSK maps bit 0 to the sign of
//! the real part and bit 1 to the sign of the imaginary part. 16-QAM uses the
//! same two-bit Gray code on each axis, bits (0, 1) on the real axis and
//! (2, 3) on the imaginary axis:
//!
//! ```text
//! axis bits   00   01   11   10
//! amplitude   +1   +3   -3   -1     (scaled by 1/sqrt(10))
//! ```
//!
//! LLRs follow `ln P(bit = 0) / P(bit = 1)`: positive values favour 0.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::FrameGrid;
use crate::planner::{ReClass, ReMap};
use crate::{Error, Result};

/// Per-axis 16-QAM amplitude for the two-bit label `(sign, magnitude)`.
const QAM16_AXIS: [f64; 4] = [1.0, 3.0, -1.0, -3.0];

/// Soft-demapper flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlrMethod {
    /// Log-sum-exp over the constellation subsets.
    #[default]
    Exact,
    /// Only the nearest point of each subset.
    MaxLog,
}

/// A unit-average-power Gray-labelled constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    bits_per_symbol: u32,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(bits_per_symbol: u32) -> Result<Self> {
        let points = match bits_per_symbol {
            2 => (0..4u32)
                .map(|label| {
                    let re = if label & 0b10 == 0 { 1.0 } else { -1.0 };
                    let im = if label & 0b01 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(re, im) * FRAC_1_SQRT_2
                })
                .collect(),
            4 => {
                let scale = 1.0 / 10f64.sqrt();
                (0..16u32)
                    .map(|label| {
                        let re = QAM16_AXIS[(label >> 2) as usize];
                        let im = QAM16_AXIS[(label & 0b11) as usize];
                        Complex64::new(re, im) * scale
                    })
                    .collect()
            }
            q => {
                return Err(Error::InvalidParameter(format!(
                    "unsupported modulation order {q} bits/symbol"
                )))
            }
        };
        Ok(Constellation {
            bits_per_symbol,
            points,
        })
    }

    pub fn qpsk() -> Self {
        Self::new(2).expect("QPSK")
    }

    pub fn qam16() -> Self {
        Self::new(4).expect("16-QAM")
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Label of the point nearest to `y`.
    pub fn nearest(&self, y: Complex64) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| (y - a.1).norm_sqr().total_cmp(&(y - b.1).norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Label of `y` if it is exactly one of the constellation points.
    pub fn label_of(&self, y: Complex64) -> Option<usize> {
        self.points.iter().position(|p| *p == y)
    }

    /// Table of `label bits -> point` lines, for documentation dumps.
    pub fn dump(&self) -> String {
        let q = self.bits_per_symbol as usize;
        self.points
            .iter()
            .enumerate()
            .map(|(label, p)| format!("{label:0q$b}  {:+.6} {:+.6}j\n", p.re, p.im))
            .collect()
    }
}

/// Maps groups of `Q` bits (MSB first) to constellation symbols.
pub fn modulate(bits: &[u8], constellation: &Constellation) -> Result<Vec<Complex64>> {
    let q = constellation.bits_per_symbol as usize;
    if !bits.len().is_multiple_of(q) {
        return Err(Error::InvalidParameter(format!(
            "{} bits is not a multiple of {q} bits/symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(q)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            constellation.points[label]
        })
        .collect())
}

/// Bits of the nearest constellation point for every symbol.
pub fn hard_bits(symbols: &[Complex64], constellation: &Constellation) -> Vec<u8> {
    let q = constellation.bits_per_symbol as usize;
    let mut out = Vec::with_capacity(symbols.len() * q);
    for &y in symbols {
        let label = constellation.nearest(y);
        out.extend((0..q).rev().map(|i| ((label >> i) & 1) as u8));
    }
    out
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// LLRs of the two bits of one 16-QAM axis from the real-valued observation
/// `y` with per-axis noise variance `var_axis`.
fn qam16_axis_llrs(y: f64, var_axis: f64, method: LlrMethod) -> [f64; 2] {
    let scale = 1.0 / 10f64.sqrt();
    let metric: [f64; 4] = std::array::from_fn(|label| {
        let d = y - QAM16_AXIS[label] * scale;
        -d * d / (2.0 * var_axis)
    });
    let combine = |x: f64, y: f64| match method {
        LlrMethod::Exact => log_sum_exp(x, y),
        LlrMethod::MaxLog => x.max(y),
    };
    // Labels: bit 1 of the pair is the sign bit, bit 0 the magnitude bit.
    let sign0 = combine(metric[0b00], metric[0b01]);
    let sign1 = combine(metric[0b10], metric[0b11]);
    let mag0 = combine(metric[0b00], metric[0b10]);
    let mag1 = combine(metric[0b01], metric[0b11]);
    [sign0 - sign1, mag0 - mag1]
}

/// Soft demapping under circular complex Gaussian noise of total variance
/// `noise_variance` per symbol.
pub fn demodulate_llr(
    symbols: &[Complex64],
    constellation: &Constellation,
    noise_variance: f64,
    method: LlrMethod,
) -> Result<Vec<f64>> {
    if !(noise_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let q = constellation.bits_per_symbol as usize;
    let mut llrs = Vec::with_capacity(symbols.len() * q);
    match q {
        2 => {
            // Exact and max-log coincide for QPSK.
            let gain = 2.0 * std::f64::consts::SQRT_2 / noise_variance;
            for y in symbols {
                llrs.push(gain * y.re);
                llrs.push(gain * y.im);
            }
        }
        4 => {
            let var_axis = noise_variance / 2.0;
            for y in symbols {
                llrs.extend(qam16_axis_llrs(y.re, var_axis, method));
                llrs.extend(qam16_axis_llrs(y.im, var_axis, method));
            }
        }
        _ => unreachable!("constellation orders are validated on construction"),
    }
    Ok(llrs)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const PILOT_SALT: u64 = 0x5049_4c4f_5453;
const FILLER_SALT: u64 = 0x4649_4c4c_4552;

fn known_qpsk(salt: u64, subcarrier: usize, symbol: usize) -> Complex64 {
    let h = splitmix64(salt ^ splitmix64(((symbol as u64) << 32) | subcarrier as u64));
    Constellation::qpsk().point((h >> 62) as usize)
}

/// Known QPSK pilot transmitted at `(subcarrier, symbol)` in pilots-only frames.
pub fn pilot_symbol(subcarrier: usize, symbol: usize) -> Complex64 {
    known_qpsk(PILOT_SALT, subcarrier, symbol)
}

/// Known QPSK symbol carried by a filler RE.
pub fn filler_symbol(subcarrier: usize, symbol: usize) -> Complex64 {
    known_qpsk(FILLER_SALT, subcarrier, symbol)
}

/// Places the two symbol streams on their REs in scan order and fills the
/// filler REs with their known symbols.
pub fn map_to_grid(sensing_symbols: &[Complex64], regular_symbols: &[Complex64], re_map: &ReMap) -> Result<FrameGrid> {
    if sensing_symbols.len() != re_map.sensing.len() {
        return Err(Error::LengthMismatch {
            what: "sensing-grid symbols",
            expected: re_map.sensing.len(),
            actual: sensing_symbols.len(),
        });
    }
    if regular_symbols.len() != re_map.regular.len() {
        return Err(Error::LengthMismatch {
            what: "regular symbols",
            expected: re_map.regular.len(),
            actual: regular_symbols.len(),
        });
    }
    let mut frame = FrameGrid::zeros(re_map.shape());
    for (&(n, m), &s) in re_map.sensing.iter().zip(sensing_symbols) {
        frame[[n, m]] = s;
    }
    for (&(n, m), &s) in re_map.regular.iter().zip(regular_symbols) {
        frame[[n, m]] = s;
    }
    for &(n, m) in &re_map.filler {
        frame[[n, m]] = filler_symbol(n, m);
    }
    Ok(frame)
}

/// Reads the sensing-grid and regular streams back out of a frame.
pub fn demap_from_grid(frame: &FrameGrid, re_map: &ReMap) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if frame.dim() != re_map.shape() {
        return Err(Error::ShapeMismatch(format!(
            "frame {:?} vs RE map {:?}",
            frame.dim(),
            re_map.shape()
        )));
    }
    let pick = |class: ReClass, positions: &[(usize, usize)]| {
        debug_assert!(positions.iter().all(|&(n, m)| re_map.class_at(n, m) == class));
        positions.iter().map(|&(n, m)| frame[[n, m]]).collect()
    };
    Ok((
        pick(ReClass::SensingGrid, &re_map.sensing),
        pick(ReClass::Regular, &re_map.regular),
    ))
}
