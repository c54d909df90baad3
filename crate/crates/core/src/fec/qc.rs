//! Quasi-cyclic base matrices and their lifting to full parity-check matrices.
//!
//! A base entry `s >= 0` at block `(i, j)` expands to the `z x z` identity
//! cyclically shifted by `s`: row `i z + r` checks column `j z + (r + s) mod z`.
//! Negative entries are all-zero blocks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::ParityCheckMatrix;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QcBase {
    pub lifting: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major shifts, `-1` for a zero block.
    pub shifts: Vec<i32>,
}

impl QcBase {
    pub fn get(&self, row: usize, col: usize) -> Option<usize> {
        let s = self.shifts[row * self.n_cols + col];
        (s >= 0).then_some(s as usize)
    }

    pub fn lift(&self) -> Result<ParityCheckMatrix> {
        let z = self.lifting;
        let mut rows = Vec::with_capacity(self.n_rows * z);
        for i in 0..self.n_rows {
            for r in 0..z {
                let row = (0..self.n_cols)
                    .filter_map(|j| self.get(i, j).map(|s| j * z + (r + s) % z))
                    .collect();
                rows.push(row);
            }
        }
        ParityCheckMatrix::from_rows(self.n_cols * z, rows)
    }

    /// Base-graph 4-cycles that survive lifting (each counted once per
    /// row pair and column pair).
    pub fn four_cycles(&self) -> usize {
        let z = self.lifting as i64;
        let mut count = 0;
        for i1 in 0..self.n_rows {
            for i2 in i1 + 1..self.n_rows {
                for j1 in 0..self.n_cols {
                    for j2 in j1 + 1..self.n_cols {
                        let (Some(a), Some(b), Some(c), Some(d)) =
                            (self.get(i1, j1), self.get(i1, j2), self.get(i2, j2), self.get(i2, j1))
                        else {
                            continue;
                        };
                        if (a as i64 - b as i64 + c as i64 - d as i64).rem_euclid(z) == 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    /// Base-graph 6-cycles that survive lifting.
    pub fn six_cycles(&self) -> usize {
        let z = self.lifting as i64;
        let mut count = 0;
        let rows = self.n_rows;
        let cols = self.n_cols;
        let s = |i, j| self.get(i, j).map(|v| v as i64);
        for j1 in 0..cols {
            for j2 in 0..cols {
                for j3 in 0..cols {
                    if j1 == j2 || j2 == j3 || j1 == j3 {
                        continue;
                    }
                    for i1 in 0..rows {
                        for i2 in 0..rows {
                            for i3 in 0..rows {
                                if i1 == i2 || i2 == i3 || i1 == i3 {
                                    continue;
                                }
                                let (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) =
                                    (s(i1, j1), s(i1, j2), s(i2, j2), s(i2, j3), s(i3, j3), s(i3, j1))
                                else {
                                    continue;
                                };
                                if (a - b + c - d + e - f).rem_euclid(z) == 0 {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        // Each cycle is found once per starting column and direction.
        count / 6
    }

    /// Surviving 4-cycles through base edge `(i, j)`.
    pub fn four_cycles_through(&self, i: usize, j: usize) -> usize {
        let z = self.lifting as i64;
        let Some(a) = self.get(i, j) else { return 0 };
        let mut count = 0;
        for i2 in (0..self.n_rows).filter(|&r| r != i) {
            let Some(d) = self.get(i2, j) else { continue };
            for j2 in (0..self.n_cols).filter(|&c| c != j) {
                let (Some(b), Some(c)) = (self.get(i, j2), self.get(i2, j2)) else {
                    continue;
                };
                if (a as i64 - b as i64 + c as i64 - d as i64).rem_euclid(z) == 0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Surviving 6-cycles through base edge `(i, j)`, each counted once per direction.
    pub fn six_cycles_through(&self, i: usize, j: usize) -> usize {
        let z = self.lifting as i64;
        let s = |r, c| self.get(r, c).map(|v| v as i64);
        let Some(a) = s(i, j) else { return 0 };
        let mut count = 0;
        for j2 in (0..self.n_cols).filter(|&c| c != j) {
            let Some(b) = s(i, j2) else { continue };
            for i2 in (0..self.n_rows).filter(|&r| r != i) {
                let Some(c) = s(i2, j2) else { continue };
                for j3 in (0..self.n_cols).filter(|&c| c != j && c != j2) {
                    let Some(d) = s(i2, j3) else { continue };
                    for i3 in (0..self.n_rows).filter(|&r| r != i && r != i2) {
                        let (Some(e), Some(f)) = (s(i3, j3), s(i3, j)) else {
                            continue;
                        };
                        if (a - b + c - d + e - f).rem_euclid(z) == 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }
}

/// Column weights of the information part of a dual-diagonal base matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualDiagonalProfile {
    pub lifting: usize,
    pub n_checks: usize,
    pub info_col_weights: Vec<usize>,
}

/// Designs a rate `k/(k+m)` base matrix with an IEEE 802.11n-style parity
/// part: one weight-3 column with shifts `(1, 0, 1)` followed by a
/// dual-diagonal staircase of zero shifts. That parity part is invertible
/// for any lifting, so the lifted matrix has full rank.
///
/// Information-column rows and shifts are drawn from `seed`, greedily
/// avoiding 4-cycles and then as many 6-cycles as the search finds.
pub fn design_dual_diagonal(profile: &DualDiagonalProfile, seed: u64) -> QcBase {
    let m = profile.n_checks;
    let k = profile.info_col_weights.len();
    let n = k + m;
    let z = profile.lifting;
    let mut base = QcBase {
        lifting: z,
        n_rows: m,
        n_cols: n,
        shifts: vec![-1; m * n],
    };
    let set = |b: &mut QcBase, i: usize, j: usize, s: i32| b.shifts[i * n + j] = s;

    let mid = m / 2;
    set(&mut base, 0, k, 1);
    set(&mut base, mid, k, 0);
    set(&mut base, m - 1, k, 1);
    for j in 1..m {
        set(&mut base, j - 1, k + j, 0);
        set(&mut base, j, k + j, 0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_load: Vec<usize> = (0..m)
        .map(|i| (0..n).filter(|&j| base.get(i, j).is_some()).count())
        .collect();
    for (j, &w) in profile.info_col_weights.iter().enumerate() {
        // Lightest rows first, ties broken at random.
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        order.sort_by_key(|&i| row_load[i]);
        let rows = &order[..w];
        for &i in rows {
            row_load[i] += 1;
            let mut best = (usize::MAX, 0i32);
            for attempt in 0..400 {
                let s = rng.random_range(0..z) as i32;
                set(&mut base, i, j, s);
                let c4 = base.four_cycles_through(i, j);
                let score = if c4 > 0 {
                    usize::MAX / 2 + c4
                } else if attempt < 200 {
                    base.six_cycles_through(i, j)
                } else {
                    0
                };
                if score < best.0 {
                    best = (score, s);
                }
                if score == 0 {
                    break;
                }
            }
            set(&mut base, i, j, best.1);
        }
    }
    base
}
