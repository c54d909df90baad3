//! Sparse binary parity-check matrices and the alist text format.
//!
//! The alist layout read and written here is:
//!
//! ```text
//! n m                      # columns (code bits), rows (checks)
//! max_col_weight max_row_weight
//! w_0 w_1 ... w_{n-1}      # column weights
//! w_0 w_1 ... w_{m-1}      # row weights
//! <n lines>                # 1-based row indices of each column, 0-padded
//! <m lines>                # 1-based column indices of each row, 0-padded
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. Zero entries are
//! padding and ignored, so unpadded files also parse.

use std::fmt::Write;
use std::path::Path;

use crate::{Error, Result};

/// Sparse binary matrix stored as sorted row and column adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from the column indices of each row.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n_cols];
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Alist(format!("row {r} repeats a column index")));
            }
            for &c in row.iter() {
                if c >= n_cols {
                    return Err(Error::Alist(format!("row {r} references column {c} >= {n_cols}")));
                }
                cols[c].push(r);
            }
        }
        Ok(ParityCheckMatrix { n_cols, rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn n_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Number of unsatisfied checks of `bits` (Hamming weight of `H bits`).
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        self.rows
            .iter()
            .filter(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) != 0)
            .count()
    }

    /// Rank over GF(2), by dense elimination.
    pub fn rank(&self) -> usize {
        let mut dense = self.to_dense_rows();
        let words = self.n_cols.div_ceil(64);
        let mut rank = 0;
        for col in 0..self.n_cols {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..dense.len()).find(|&r| dense[r][w] & b != 0) else {
                continue;
            };
            dense.swap(rank, p);
            let pivot = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for i in 0..words {
                        row[i] ^= pivot[i];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub(crate) fn to_dense_rows(&self) -> Vec<Vec<u64>> {
        let words = self.n_cols.div_ceil(64);
        self.rows
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for &c in row {
                    bits[c / 64] |= 1 << (c % 64);
                }
                bits
            })
            .collect()
    }

    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut numbers = |what: &str| -> Result<Vec<usize>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Alist(format!("unexpected end of file reading {what}")))?;
            line.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::Alist(format!("{what}: `{t}`: {e}")))
                })
                .collect()
        };
        let dims = numbers("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(Error::Alist("first line must be `n m`".into()));
        };
        let _max_weights = numbers("maximum weights")?;
        let col_weights = numbers("column weights")?;
        let row_weights = numbers("row weights")?;
        if col_weights.len() != n || row_weights.len() != m {
            return Err(Error::Alist(format!(
                "expected {n} column and {m} row weights, got {} and {}",
                col_weights.len(),
                row_weights.len()
            )));
        }
        let mut cols = Vec::with_capacity(n);
        for (c, &w) in col_weights.iter().enumerate() {
            let entries: Vec<usize> = numbers("column entries")?.into_iter().filter(|&x| x != 0).collect();
            if entries.len() != w {
                return Err(Error::Alist(format!(
                    "column {c}: weight {w} but {} entries",
                    entries.len()
                )));
            }
            cols.push(entries);
        }
        let mut rows = Vec::with_capacity(m);
        for (r, &w) in row_weights.iter().enumerate() {
            let entries: Vec<usize> = numbers("row entries")?.into_iter().filter(|&x| x != 0).collect();
            if entries.len() != w {
                return Err(Error::Alist(format!(
                    "row {r}: weight {w} but {} entries",
                    entries.len()
                )));
            }
            if let Some(&bad) = entries.iter().find(|&&x| x > n) {
                return Err(Error::Alist(format!("row {r}: column index {bad} > {n}")));
            }
            rows.push(entries.into_iter().map(|x| x - 1).collect());
        }
        let matrix = ParityCheckMatrix::from_rows(n, rows)?;
        for (c, entries) in cols.into_iter().enumerate() {
            let mut entries: Vec<usize> = entries.into_iter().map(|x| x - 1).collect();
            entries.sort_unstable();
            if entries != matrix.cols[c] {
                return Err(Error::Alist(format!("column {c} disagrees with the row lists")));
            }
        }
        Ok(matrix)
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_alist(&text)
    }

    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n_cols, self.n_rows());
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for (lists, width) in [(&self.cols, max_col), (&self.rows, max_row)] {
            for list in lists {
                let mut padded: Vec<usize> = list.iter().map(|x| x + 1).collect();
                padded.resize(width, 0);
                let _ = writeln!(s, "{}", join(&mut padded.into_iter()));
            }
        }
        s
    }
}
