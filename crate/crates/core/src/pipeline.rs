//! One frame end to end: bits, coding, mapping, channel, communication
//! equalization, decoding, remodulation and sensing equalization.
//!
//! Hybrid and genie-aided frames carry two independent codeword streams:
//! stream S on the sensing grid (low order) and stream R on the regular REs.
//! Keeping them apart is what lets the sensing-grid symbols decode at a lower
//! SNR than the rest of the frame. Comm-centric frames have stream R only and
//! pilots-only frames put known pilots on the grid.

use ndarray::Zip;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel_and_noise, build_cfr, NoiseConfig, Scenario};
use crate::fec::{shorten, BpDecoder, LdpcCode, Shortened};
use crate::grid::{divide, FrameGrid};
use crate::modem::{demap_from_grid, demodulate_llr, map_to_grid, modulate, pilot_symbol, Constellation, LlrMethod};
use crate::planner::{build_re_map, segment_stream, AllocationMode, FramePlan, ReClass, ReMap, Segment};
use crate::{Error, Result};

/// Coded content of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTx {
    pub bits_per_symbol: u32,
    pub segments: Vec<Segment>,
    pub shortened: Vec<Shortened>,
    /// Full-length codewords, known (shortened) bits included.
    pub codewords: Vec<Vec<u8>>,
    pub symbols: Vec<Complex64>,
}

/// What the transmitter sent.
#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub x: FrameGrid,
    /// Sensing-grid stream (hybrid and genie-aided only).
    pub stream_s: Option<StreamTx>,
    pub stream_r: StreamTx,
}

fn random_bits(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

fn encode_stream(n_re: usize, bits_per_symbol: u32, code: &LdpcCode, rng: &mut impl Rng) -> Result<StreamTx> {
    let (segments, spare) = segment_stream(n_re * bits_per_symbol as usize, code.n(), code.k());
    debug_assert_eq!(spare, 0, "RE map leaves no spare bits");
    let mut shortened = Vec::with_capacity(segments.len());
    let mut codewords = Vec::with_capacity(segments.len());
    let mut coded = Vec::with_capacity(n_re * bits_per_symbol as usize);
    for seg in &segments {
        let sh = shorten(&random_bits(rng, seg.info_len), code)?;
        let cw = code.encode(&sh.info)?;
        coded.extend(sh.transmitted(&cw));
        shortened.push(sh);
        codewords.push(cw);
    }
    let symbols = modulate(&coded, &Constellation::new(bits_per_symbol)?)?;
    Ok(StreamTx {
        bits_per_symbol,
        segments,
        shortened,
        codewords,
        symbols,
    })
}

/// Draws the information bits, encodes both streams and maps them to the grid.
pub fn build_tx_frame(plan: &FramePlan, re_map: &ReMap, code: &LdpcCode, rng: &mut impl Rng) -> Result<TxRecord> {
    if code.n() != plan.codeword_len || code.k() != plan.info_len() {
        return Err(Error::InvalidParameter(format!(
            "code ({}, {}) does not match the plan ({}, {})",
            code.n(),
            code.k(),
            plan.codeword_len,
            plan.info_len()
        )));
    }
    let (stream_s, sensing_symbols) = match re_map.mode {
        AllocationMode::Hybrid | AllocationMode::GenieAided => {
            let s = encode_stream(re_map.sensing.len(), plan.q_s, code, rng)?;
            let symbols = s.symbols.clone();
            (Some(s), symbols)
        }
        AllocationMode::PilotsOnly => (None, re_map.sensing.iter().map(|&(n, m)| pilot_symbol(n, m)).collect()),
        AllocationMode::CommCentric => (None, Vec::new()),
    };
    let stream_r = encode_stream(re_map.regular.len(), plan.q_r, code, rng)?;
    let x = map_to_grid(&sensing_symbols, &stream_r.symbols, re_map)?;
    Ok(TxRecord { x, stream_s, stream_r })
}

/// Zero-forcing with the known dominant-path channel: `Y / H0`.
pub fn comm_equalize(y: &FrameGrid, h0: &FrameGrid) -> Result<FrameGrid> {
    divide(y, h0)
}

/// Decoding outcome of one stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CodewordStats {
    pub total: usize,
    /// Decoded word differs from the transmitted codeword.
    pub failed: usize,
    /// Decoder stopped without a zero syndrome.
    pub unconverged: usize,
}

impl CodewordStats {
    pub fn bler(&self) -> Option<f64> {
        (self.total > 0).then(|| self.failed as f64 / self.total as f64)
    }
}

/// Estimated transmit frame and per-stream decoding statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub x_hat: FrameGrid,
    pub stream_s: Option<CodewordStats>,
    pub stream_r: Option<CodewordStats>,
}

/// What the receiver remodulates after decoding a codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Remodulation {
    /// The hard decision on every codeword bit.
    #[default]
    Codeword,
    /// A fresh encoding of the decided information bits. A failed word then
    /// has parity symbols unrelated to the received samples; kept as an
    /// ablation of the default.
    ReencodedInfo,
}

/// Receiver-side decoding setup shared by all frames.
#[derive(Debug, Clone, Copy)]
pub struct StreamDecoder<'a> {
    pub code: &'a LdpcCode,
    pub bp: &'a BpDecoder,
    pub remodulation: Remodulation,
}

fn decode_stream(
    symbols: &[Complex64],
    tx: &StreamTx,
    dec: StreamDecoder<'_>,
    noise_variance: f64,
) -> Result<(Vec<Complex64>, CodewordStats)> {
    let constellation = Constellation::new(tx.bits_per_symbol)?;
    let llrs = demodulate_llr(symbols, &constellation, noise_variance, LlrMethod::Exact)?;
    let mut stats = CodewordStats {
        total: tx.segments.len(),
        ..Default::default()
    };
    let mut decided = Vec::with_capacity(llrs.len());
    let mut offset = 0;
    for ((seg, sh), cw) in tx.segments.iter().zip(&tx.shortened).zip(&tx.codewords) {
        let chunk = &llrs[offset..offset + seg.coded_len];
        offset += seg.coded_len;
        let res = dec.bp.decode(&sh.expand_llrs(chunk)?)?;
        stats.unconverged += usize::from(!res.converged);
        stats.failed += usize::from(res.bits != *cw);
        let bits = match dec.remodulation {
            // A failed word still yields partly right symbols.
            Remodulation::Codeword => res.bits,
            Remodulation::ReencodedInfo => {
                let info: Vec<u8> = dec.code.info_positions().iter().map(|&p| res.bits[p]).collect();
                dec.code.encode(&info)?
            }
        };
        decided.extend(sh.transmitted(&bits));
    }
    Ok((modulate(&decided, &constellation)?, stats))
}

/// Recovers the transmit frame from the equalized frame.
///
/// `noise_variance` is the per-symbol noise variance after communication
/// equalization. Genie-aided frames return the transmitted frame; pilots-only
/// frames return the pilots on the grid and zeros elsewhere (data REs are not
/// decoded).
pub fn detect_frame(
    y_hat: &FrameGrid,
    re_map: &ReMap,
    decoder: StreamDecoder<'_>,
    tx: &TxRecord,
    noise_variance: f64,
) -> Result<Detection> {
    match re_map.mode {
        AllocationMode::GenieAided => Ok(Detection {
            x_hat: tx.x.clone(),
            stream_s: None,
            stream_r: None,
        }),
        AllocationMode::PilotsOnly => {
            let mut x_hat = FrameGrid::zeros(re_map.shape());
            for &(n, m) in &re_map.sensing {
                x_hat[[n, m]] = pilot_symbol(n, m);
            }
            Ok(Detection {
                x_hat,
                stream_s: None,
                stream_r: None,
            })
        }
        AllocationMode::Hybrid | AllocationMode::CommCentric => {
            let (sensing, regular) = demap_from_grid(y_hat, re_map)?;
            let (s_hat, stats_s) = match &tx.stream_s {
                Some(s) => {
                    let (sym, st) = decode_stream(&sensing, s, decoder, noise_variance)?;
                    (sym, Some(st))
                }
                None => (Vec::new(), None),
            };
            let (r_hat, stats_r) = decode_stream(&regular, &tx.stream_r, decoder, noise_variance)?;
            Ok(Detection {
                x_hat: map_to_grid(&s_hat, &r_hat, re_map)?,
                stream_s: stats_s,
                stream_r: Some(stats_r),
            })
        }
    }
}

/// Zero-forcing with the estimated symbols: `Y_hat / X_hat`.
///
/// Pilots-only frames are divided only at the grid REs, giving the
/// `ceil(N/K_F) x ceil(M/K_T)` decimated matrix.
pub fn sensing_equalize(y_hat: &FrameGrid, x_hat: &FrameGrid, re_map: &ReMap, plan: &FramePlan) -> Result<FrameGrid> {
    if re_map.mode != AllocationMode::PilotsOnly {
        return divide(y_hat, x_hat);
    }
    if y_hat.dim() != re_map.shape() || x_hat.dim() != re_map.shape() {
        return Err(Error::ShapeMismatch("frame vs RE map".into()));
    }
    let mut h = FrameGrid::zeros(plan.decimated_shape());
    for &(n, m) in &re_map.sensing {
        let x = x_hat[[n, m]];
        if x == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroDivisor {
                subcarrier: n,
                symbol: m,
            });
        }
        h[[n / plan.k_f, m / plan.k_t]] = y_hat[[n, m]] / x;
    }
    Ok(h)
}

/// Positions whose symbols are genuinely estimated: coded data REs, without
/// pilots or filler.
pub fn data_positions(re_map: &ReMap) -> Vec<(usize, usize)> {
    match re_map.mode {
        AllocationMode::Hybrid | AllocationMode::GenieAided => {
            re_map.sensing.iter().chain(&re_map.regular).copied().collect()
        }
        AllocationMode::CommCentric => re_map.regular.clone(),
        AllocationMode::PilotsOnly => Vec::new(),
    }
}

/// Symbol errors over `positions`: exact comparison of constellation points.
pub fn symbol_errors(x: &FrameGrid, x_hat: &FrameGrid, positions: &[(usize, usize)]) -> usize {
    positions.iter().filter(|&&(n, m)| x[[n, m]] != x_hat[[n, m]]).count()
}

/// Seeds of one realization. Every mode run with the same seeds sees the
/// same noise, and modes with the same stream layout the same bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSeeds {
    pub bits: u64,
    pub noise: u64,
}

/// Frames kept for diagnostics and controlled experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDiagnostics {
    pub x: FrameGrid,
    pub x_hat: FrameGrid,
    pub y_hat: FrameGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub mode: AllocationMode,
    /// Sensing CSI; decimated for pilots-only frames.
    pub h_hat: FrameGrid,
    /// Subcarrier spacing and symbol duration of `h_hat`'s axes.
    pub csi_spacing: (f64, f64),
    pub symbol_errors: usize,
    pub data_symbols: usize,
    pub stream_s: Option<CodewordStats>,
    pub stream_r: Option<CodewordStats>,
    pub diagnostics: Option<FrameDiagnostics>,
}

impl FrameResult {
    /// Symbol error rate over the data REs; `None` when nothing is decoded.
    pub fn ser(&self) -> Option<f64> {
        match self.mode {
            AllocationMode::PilotsOnly => None,
            _ if self.data_symbols == 0 => None,
            _ => Some(self.symbol_errors as f64 / self.data_symbols as f64),
        }
    }
}

/// Per-plan state shared by all frames: RE maps of every mode, the code and
/// its decoder.
#[derive(Debug, Clone)]
pub struct FrameRunner<'c> {
    plan: FramePlan,
    code: &'c LdpcCode,
    decoder: BpDecoder,
    maps: Vec<(AllocationMode, ReMap)>,
    pub keep_diagnostics: bool,
    pub remodulation: Remodulation,
}

impl<'c> FrameRunner<'c> {
    pub fn new(plan: &FramePlan, code: &'c LdpcCode, decoder: BpDecoder) -> Result<Self> {
        let maps = AllocationMode::ALL
            .into_iter()
            .map(|mode| Ok((mode, build_re_map(&plan.with_mode(mode))?)))
            .collect::<Result<_>>()?;
        Ok(FrameRunner {
            plan: *plan,
            code,
            decoder,
            maps,
            keep_diagnostics: false,
            remodulation: Remodulation::default(),
        })
    }

    pub fn plan(&self) -> &FramePlan {
        &self.plan
    }

    pub fn re_map(&self, mode: AllocationMode) -> &ReMap {
        &self.maps.iter().find(|(m, _)| *m == mode).expect("all modes mapped").1
    }

    /// Transmits one frame of `mode` through `scenario` at receive SNR
    /// `snr_db` (dominant path, per RE) and estimates the sensing CSI.
    pub fn run(
        &self,
        scenario: &Scenario,
        mode: AllocationMode,
        snr_db: f64,
        seeds: FrameSeeds,
    ) -> Result<FrameResult> {
        scenario.validate()?;
        let plan = self.plan.with_mode(mode);
        let num = &plan.numerology;
        let re_map = self.re_map(mode);

        let tx = build_tx_frame(&plan, re_map, self.code, &mut ChaCha8Rng::seed_from_u64(seeds.bits))?;
        let h = build_cfr(scenario, num);
        let noise = NoiseConfig::from_receive_snr_db(snr_db, scenario.reference.gain);
        let y = apply_channel_and_noise(&tx.x, &h, noise, &mut ChaCha8Rng::seed_from_u64(seeds.noise))?;
        let h0 = scenario.reference.cfr(num);
        let y_hat = comm_equalize(&y, &h0)?;
        // Floor keeps noiseless runs finite; LLRs saturate in the decoder anyway.
        let eq_noise = (noise.sigma2 / scenario.reference.gain.norm_sqr()).max(1e-12);
        let decoder = StreamDecoder {
            code: self.code,
            bp: &self.decoder,
            remodulation: self.remodulation,
        };
        let det = detect_frame(&y_hat, re_map, decoder, &tx, eq_noise)?;
        let h_hat = sensing_equalize(&y_hat, &det.x_hat, re_map, &plan)?;

        let data = data_positions(re_map);
        let errors = symbol_errors(&tx.x, &det.x_hat, &data);
        let csi_spacing = if mode == AllocationMode::PilotsOnly {
            (
                num.subcarrier_spacing * plan.k_f as f64,
                num.symbol_duration * plan.k_t as f64,
            )
        } else {
            (num.subcarrier_spacing, num.symbol_duration)
        };
        let diagnostics = self.keep_diagnostics.then(|| FrameDiagnostics {
            x: tx.x.clone(),
            x_hat: det.x_hat.clone(),
            y_hat,
        });
        Ok(FrameResult {
            mode,
            h_hat,
            csi_spacing,
            symbol_errors: errors,
            data_symbols: data.len(),
            stream_s: det.stream_s,
            stream_r: det.stream_r,
            diagnostics,
        })
    }
}

/// Convenience wrapper: one frame with the standard decoder.
pub fn run_frame(
    scenario: &Scenario,
    plan: &FramePlan,
    code: &LdpcCode,
    snr_db: f64,
    seeds: FrameSeeds,
) -> Result<FrameResult> {
    FrameRunner::new(plan, code, BpDecoder::standard(code))?.run(scenario, plan.mode, snr_db, seeds)
}

/// Nearest wrong constellation point to `y`: the error a hard decision
/// makes when the noise pushes it across the closest boundary.
pub fn nearest_wrong_point(constellation: &Constellation, truth: Complex64, y: Complex64) -> Complex64 {
    constellation
        .points()
        .iter()
        .copied()
        .filter(|p| *p != truth)
        .min_by(|a, b| (y - a).norm_sqr().total_cmp(&(y - b).norm_sqr()))
        .expect("constellations have at least two points")
}

/// Replaces `count` distinct data symbols of `x_hat`, drawn uniformly, by
/// the nearest wrong point of their constellation to the received sample.
///
/// This imitates isolated decision errors while leaving every other RE
/// untouched. Returns the corrupted positions.
pub fn corrupt_symbols<R: Rng + ?Sized>(
    x_hat: &mut FrameGrid,
    y_hat: &FrameGrid,
    re_map: &ReMap,
    plan: &FramePlan,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if x_hat.dim() != re_map.shape() || y_hat.dim() != re_map.shape() {
        return Err(Error::ShapeMismatch("frame vs RE map".into()));
    }
    let data = data_positions(re_map);
    if count > data.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot corrupt {count} of {} data symbols",
            data.len()
        )));
    }
    let qs = Constellation::new(plan.q_s)?;
    let qr = Constellation::new(plan.q_r)?;
    let picked: Vec<(usize, usize)> = rand::seq::index::sample(rng, data.len(), count)
        .into_iter()
        .map(|i| data[i])
        .collect();
    for &(n, m) in &picked {
        let c = match re_map.class_at(n, m) {
            ReClass::SensingGrid => &qs,
            _ => &qr,
        };
        x_hat[[n, m]] = nearest_wrong_point(c, x_hat[[n, m]], y_hat[[n, m]]);
    }
    Ok(picked)
}

/// Element-wise `|a / b - 1|` maximum, handy for equalizer checks.
pub fn max_relative_deviation(a: &FrameGrid, b: &FrameGrid) -> f64 {
    let mut worst = 0.0f64;
    Zip::from(a)
        .and(b)
        .for_each(|a, b| worst = worst.max((a / b - 1.0).norm()));
    worst
}
