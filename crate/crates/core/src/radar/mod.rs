//! Range-Doppler processing of the sensing CSI.
//!
//! The periodogram transforms the zero-padded CSI with an inverse DFT over
//! subcarriers and a forward DFT over symbols, matching the steering-vector
//! signs, so a path at excess range `dr` and differential Doppler `dfd`
//! peaks at bin `(N' df dr / c, M' T0 dfd)`, both taken modulo the image size.

mod cfar;
mod metrics;

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::TargetTruth;
use crate::grid::FrameGrid;
use crate::{Error, Result, SPEED_OF_LIGHT};

pub use cfar::{ca_cfar, threshold_mask, CfarConfig, Detection};
pub use metrics::{match_detections, target_snr, MatchResult, TargetSnr};

/// Range-Doppler image.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    /// `N' x M'` powers, range bins along rows.
    pub power: Array2<f64>,
    /// Zero-padding factors (range, Doppler).
    pub pad: (usize, usize),
    /// Subcarrier spacing and symbol duration of the CSI axes.
    pub spacing: (f64, f64),
}

/// Fractional bin position of a ground-truth path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthBin {
    pub range_bin: f64,
    pub doppler_bin: f64,
}

impl Periodogram {
    pub fn shape(&self) -> (usize, usize) {
        self.power.dim()
    }

    /// Excess range covered by one bin, m.
    pub fn range_bin_width(&self) -> f64 {
        SPEED_OF_LIGHT / (self.power.nrows() as f64 * self.spacing.0)
    }

    /// Differential Doppler covered by one bin, Hz.
    pub fn doppler_bin_width(&self) -> f64 {
        1.0 / (self.power.ncols() as f64 * self.spacing.1)
    }

    /// Bin of an excess range and differential Doppler, wrapped into the image.
    pub fn bin_of(&self, excess_range: f64, doppler: f64) -> TruthBin {
        let (rows, cols) = self.shape();
        TruthBin {
            range_bin: (excess_range / self.range_bin_width()).rem_euclid(rows as f64),
            doppler_bin: (doppler / self.doppler_bin_width()).rem_euclid(cols as f64),
        }
    }

    pub fn truth_bins(&self, truth: &[TargetTruth]) -> Vec<TruthBin> {
        truth
            .iter()
            .map(|t| self.bin_of(t.excess_range, t.differential_doppler))
            .collect()
    }

    /// Excess range of a range bin (non-negative branch).
    pub fn range_of(&self, bin: usize) -> f64 {
        bin as f64 * self.range_bin_width()
    }

    /// Differential Doppler of a Doppler bin, upper half mapped to negative shifts.
    pub fn doppler_of(&self, bin: usize) -> f64 {
        let cols = self.power.ncols() as i64;
        let b = bin as i64;
        let signed = if b >= (cols + 1) / 2 { b - cols } else { b };
        signed as f64 * self.doppler_bin_width()
    }

    /// Writes the image as text: `#`-prefixed header lines (shape, pad
    /// factors, bin widths), then one line per range bin with the powers of
    /// all Doppler bins separated by spaces.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        let (rows, cols) = self.shape();
        writeln!(
            w,
            "# rows {rows} cols {cols} pad_range {} pad_doppler {}",
            self.pad.0, self.pad.1
        )
        .map_err(io)?;
        writeln!(
            w,
            "# range_bin_m {:e} doppler_bin_hz {:e}",
            self.range_bin_width(),
            self.doppler_bin_width()
        )
        .map_err(io)?;
        for row in self.power.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Periodogram of the CSI `h_hat` with zero padding `(pad_range, pad_doppler)`.
/// `spacing` holds the subcarrier spacing and symbol duration of `h_hat`.
pub fn periodogram(h_hat: &FrameGrid, pad: (usize, usize), spacing: (f64, f64)) -> Result<Periodogram> {
    let (n, m) = h_hat.dim();
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("empty CSI matrix".into()));
    }
    if pad.0 == 0 || pad.1 == 0 {
        return Err(Error::InvalidParameter("zero-padding factors must be >= 1".into()));
    }
    let (rows, cols) = (n * pad.0, m * pad.1);
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(cols);
    let inverse = planner.plan_fft_inverse(rows);

    // Row-major buffer; only the first n rows carry data before the range transform.
    let mut buf = vec![Complex64::new(0.0, 0.0); rows * cols];
    for (i, row) in h_hat.rows().into_iter().enumerate() {
        let dst = &mut buf[i * cols..(i + 1) * cols];
        for (d, s) in dst.iter_mut().zip(row) {
            *d = *s;
        }
        forward.process(dst);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    let scale = 1.0 / (rows * cols) as f64;
    let mut power = Array2::zeros((rows, cols));
    for l in 0..cols {
        for (k, c) in column.iter_mut().enumerate() {
            *c = buf[k * cols + l];
        }
        inverse.process(&mut column);
        for (k, c) in column.iter().enumerate() {
            power[[k, l]] = c.norm_sqr() * scale;
        }
    }
    Ok(Periodogram { power, pad, spacing })
}

/// Cyclic distance between bin positions on an axis of length `len`.
pub(crate) fn cyclic_distance(a: f64, b: f64, len: usize) -> f64 {
    let d = (a - b).rem_euclid(len as f64);
    d.min(len as f64 - d)
}
