//! Two-dimensional cell-averaging CFAR over a cyclic window.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Periodogram;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarConfig {
    /// Guard cells on each side of the cell under test, per axis.
    pub guard: usize,
    /// Training cells beyond the guard cells on each side, per axis.
    pub training: usize,
    pub p_fa: f64,
    /// Half-width of the box around DC that is never reported, in bins.
    /// `None` uses four native bins (4 times the pad factor) per axis.
    pub dc_exclusion: Option<usize>,
}

impl Default for CfarConfig {
    fn default() -> Self {
        CfarConfig {
            guard: 2,
            training: 8,
            p_fa: 1e-4,
            dc_exclusion: None,
        }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.training == 0 {
            return Err(Error::InvalidParameter("CFAR needs training cells".into()));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::InvalidParameter(format!("P_FA {} outside (0, 1)", self.p_fa)));
        }
        Ok(())
    }

    /// Cells in the training annulus.
    pub fn n_training(&self) -> usize {
        let outer = 2 * (self.guard + self.training) + 1;
        let inner = 2 * self.guard + 1;
        outer * outer - inner * inner
    }

    /// Threshold multiplier giving `p_fa` on exponential noise.
    pub fn alpha(&self) -> f64 {
        let n = self.n_training() as f64;
        n * (self.p_fa.powf(-1.0 / n) - 1.0)
    }
}

/// One reported peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub power: f64,
    pub excess_range: f64,
    pub doppler: f64,
}

/// Box sums over a cyclic image in O(1) each.
struct CyclicBoxSum {
    rows: usize,
    cols: usize,
    margin: usize,
    /// Prefix sums of the image extended cyclically by `margin` on every side.
    table: Array2<f64>,
}

impl CyclicBoxSum {
    fn new(p: &Array2<f64>, margin: usize) -> Self {
        let (rows, cols) = p.dim();
        let (er, ec) = (rows + 2 * margin, cols + 2 * margin);
        let mut table = Array2::zeros((er + 1, ec + 1));
        for i in 0..er {
            let src_i = (i + rows * (margin / rows + 1) - margin) % rows;
            let mut row_sum = 0.0;
            for j in 0..ec {
                let src_j = (j + cols * (margin / cols + 1) - margin) % cols;
                row_sum += p[[src_i, src_j]];
                table[[i + 1, j + 1]] = table[[i, j + 1]] + row_sum;
            }
        }
        CyclicBoxSum {
            rows,
            cols,
            margin,
            table,
        }
    }

    /// Sum over the `(2h+1)^2` box centered on `(k, l)`, `h <= margin`.
    fn sum(&self, k: usize, l: usize, h: usize) -> f64 {
        debug_assert!(h <= self.margin && k < self.rows && l < self.cols);
        let (r0, c0) = (k + self.margin - h, l + self.margin - h);
        let (r1, c1) = (k + self.margin + h + 1, l + self.margin + h + 1);
        self.table[[r1, c1]] - self.table[[r0, c1]] - self.table[[r1, c0]] + self.table[[r0, c0]]
    }
}

fn check_window(shape: (usize, usize), cfg: &CfarConfig) -> Result<()> {
    cfg.validate()?;
    let (rows, cols) = shape;
    let width = 2 * (cfg.guard + cfg.training) + 1;
    if width > rows || width > cols {
        return Err(Error::InvalidParameter(format!(
            "CFAR window {width} exceeds the {rows} x {cols} image"
        )));
    }
    Ok(())
}

/// Bins exceeding `alpha` times the mean of their training annulus, before
/// DC exclusion and peak reduction. Its mean over pure noise is the
/// false-alarm rate.
pub fn threshold_mask(power: &Array2<f64>, cfg: &CfarConfig) -> Result<Array2<bool>> {
    check_window(power.dim(), cfg)?;
    let reach = cfg.guard + cfg.training;
    let sums = CyclicBoxSum::new(power, reach);
    let alpha = cfg.alpha();
    let n_train = cfg.n_training() as f64;
    Ok(Array2::from_shape_fn(power.dim(), |(k, l)| {
        let noise = (sums.sum(k, l, reach) - sums.sum(k, l, cfg.guard)) / n_train;
        power[[k, l]] > alpha * noise
    }))
}

/// Cell-averaging CFAR.
///
/// Threshold crossings (see [`threshold_mask`]) that are not the maximum of
/// their guard neighbourhood, or that fall in the DC box, are dropped.
/// Results are ordered by decreasing power.
pub fn ca_cfar(p: &Periodogram, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    let mask = threshold_mask(&p.power, cfg)?;
    let (rows, cols) = p.shape();
    let (dc_r, dc_c) = match cfg.dc_exclusion {
        Some(d) => (d, d),
        None => (4 * p.pad.0, 4 * p.pad.1),
    };
    let power = &p.power;
    let cyc = |d: usize, len: usize| d.min(len - d);
    let g = cfg.guard as isize;

    let mut out = Vec::new();
    for ((k, l), &hit) in mask.indexed_iter() {
        if !hit || (cyc(k, rows) <= dc_r && cyc(l, cols) <= dc_c) {
            continue;
        }
        let v = power[[k, l]];
        let is_max = (-g..=g).all(|dk| {
            (-g..=g).all(|dl| {
                let kk = (k as isize + dk).rem_euclid(rows as isize) as usize;
                let ll = (l as isize + dl).rem_euclid(cols as isize) as usize;
                power[[kk, ll]] <= v
            })
        });
        if is_max {
            out.push(Detection {
                range_bin: k,
                doppler_bin: l,
                power: v,
                excess_range: p.range_of(k),
                doppler: p.doppler_of(l),
            });
        }
    }
    out.sort_by(|a, b| b.power.total_cmp(&a.power));
    Ok(out)
}
