//! Target SNR of a periodogram and detection-to-target matching.

use super::{cyclic_distance, Detection, Periodogram, TruthBin};
use crate::{Error, Result};

/// Mean target peak over the residual floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSnr {
    /// Linear ratio `peak / floor`.
    pub gamma: f64,
    pub peak: f64,
    pub floor: f64,
}

impl TargetSnr {
    pub fn gamma_db(&self) -> f64 {
        10.0 * self.gamma.log10()
    }
}

fn rounded(b: TruthBin, shape: (usize, usize)) -> (usize, usize) {
    (
        (b.range_bin.round() as usize) % shape.0,
        (b.doppler_bin.round() as usize) % shape.1,
    )
}

fn wrap(i: usize, d: isize, len: usize) -> usize {
    (i as isize + d).rem_euclid(len as isize) as usize
}

/// Target SNR of `p` for targets at `targets` (ground-truth bins).
///
/// Each target's peak is the largest bin within one native bin of its
/// rounded ground-truth bin. The floor is the mean of all bins farther than
/// two native bins (per axis) from every target and outside the DC cross:
/// the bands within two native bins of the zero-range row and the
/// zero-Doppler column. After equalization the reference path is a constant
/// sitting exactly on the DC bin, so zero-padding spreads its leakage along
/// those two cuts, far above the noise.
pub fn target_snr(p: &Periodogram, targets: &[TruthBin]) -> Result<TargetSnr> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no targets to measure".into()));
    }
    let shape = p.shape();
    let (zr, zd) = (p.pad.0 as isize, p.pad.1 as isize);
    let power = &p.power;

    let mut peak_sum = 0.0;
    for &t in targets {
        if !(t.range_bin >= 0.0
            && t.range_bin < shape.0 as f64
            && t.doppler_bin >= 0.0
            && t.doppler_bin < shape.1 as f64)
        {
            return Err(Error::InvalidParameter(format!("target bin {t:?} outside the image")));
        }
        let (k, l) = rounded(t, shape);
        let mut best = 0.0f64;
        for dk in -zr..=zr {
            for dl in -zd..=zd {
                best = best.max(power[[wrap(k, dk, shape.0), wrap(l, dl, shape.1)]]);
            }
        }
        peak_sum += best;
    }

    let (er, ed) = (2.0 * p.pad.0 as f64, 2.0 * p.pad.1 as f64);
    let (mut floor_sum, mut floor_count) = (0.0, 0usize);
    for ((k, l), v) in power.indexed_iter() {
        let (k, l) = (k as f64, l as f64);
        let dc_cross = cyclic_distance(k, 0.0, shape.0) <= er || cyclic_distance(l, 0.0, shape.1) <= ed;
        let excluded = dc_cross
            || targets.iter().any(|z| {
                cyclic_distance(k, z.range_bin, shape.0) <= er && cyclic_distance(l, z.doppler_bin, shape.1) <= ed
            });
        if !excluded {
            floor_sum += v;
            floor_count += 1;
        }
    }
    if floor_count == 0 {
        return Err(Error::InvalidParameter(
            "exclusion zones cover the whole periodogram".into(),
        ));
    }
    let peak = peak_sum / targets.len() as f64;
    let floor = floor_sum / floor_count as f64;
    Ok(TargetSnr {
        gamma: peak / floor,
        peak,
        floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchResult {
    pub detected: usize,
    pub missed: usize,
}

/// One-to-one matching of detections to targets.
///
/// Detections are visited by decreasing power; each claims the closest
/// unclaimed target whose rounded ground-truth bin lies within
/// `tolerance` native bins on both axes (cyclic distance).
pub fn match_detections(
    p: &Periodogram,
    detections: &[Detection],
    targets: &[TruthBin],
    tolerance: f64,
) -> MatchResult {
    let shape = p.shape();
    let (tr, td) = (tolerance * p.pad.0 as f64, tolerance * p.pad.1 as f64);
    let centers: Vec<(usize, usize)> = targets.iter().map(|&t| rounded(t, shape)).collect();
    let mut claimed = vec![false; targets.len()];
    let mut order: Vec<&Detection> = detections.iter().collect();
    order.sort_by(|a, b| b.power.total_cmp(&a.power));
    for d in order {
        let best = centers
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed[*i])
            .filter_map(|(i, &(k, l))| {
                let dk = cyclic_distance(d.range_bin as f64, k as f64, shape.0);
                let dl = cyclic_distance(d.doppler_bin as f64, l as f64, shape.1);
                (dk <= tr && dl <= td).then_some((i, (dk / p.pad.0 as f64).hypot(dl / p.pad.1 as f64)))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            claimed[i] = true;
        }
    }
    let detected = claimed.iter().filter(|c| **c).count();
    MatchResult {
        detected,
        missed: targets.len() - detected,
    }
}
