//! Rate-1/2 quasi-cyclic LDPC coding.
//!
//! The shipped code is a dual-diagonal quasi-cyclic code with `n = 1024`,
//! `k = 512` (lifting 64 of a 8 x 16 base matrix), stored in
//! `data/qc_n1024_r12.alist`. Any full-rank alist matrix can be loaded
//! instead; the encoder is derived from it by Gaussian elimination.

mod decoder;
mod matrix;
pub mod qc;

use std::sync::OnceLock;

pub use decoder::{BpAlgorithm, BpDecoder, DecodeResult};
pub use matrix::ParityCheckMatrix;

use crate::{Error, Result};

/// LLR magnitude given to bits known at the receiver (shortened positions).
pub const KNOWN_BIT_LLR: f64 = 300.0;

/// Default number of belief-propagation iterations.
pub const DEFAULT_MAX_ITERATIONS: usize = 20;

const SHIPPED_ALIST: &str = include_str!("../../data/qc_n1024_r12.alist");

/// Base matrix the shipped alist file was lifted from (lifting 64).
pub const SHIPPED_BASE: [[i32; 16]; 8] = include!("../../data/qc_n1024_r12.base");

/// An LDPC code with a systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: ParityCheckMatrix,
    /// Codeword positions carrying information bits, ascending.
    info_positions: Vec<usize>,
    /// Codeword position determined by each reduced parity-check row.
    parity_positions: Vec<usize>,
    /// For each information bit, the reduced rows (as a bitset) it feeds.
    parity_generator: Vec<Vec<u64>>,
}

impl LdpcCode {
    /// Derives the systematic encoder. Pivots are taken from the rightmost
    /// columns first, so for a matrix `[A | B]` with invertible `B` the
    /// information bits occupy the first `k` positions.
    pub fn from_matrix(h: ParityCheckMatrix) -> Result<Self> {
        let m = h.n_rows();
        let n = h.n_cols();
        let mut dense = h.to_dense_rows();
        let words = n.div_ceil(64);
        let mut pivot_of_row = Vec::with_capacity(m);
        let mut is_pivot = vec![false; n];
        let mut rank = 0;
        for col in (0..n).rev() {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..m).find(|&r| dense[r][w] & b != 0) else {
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
            pivot_of_row.push(col);
            is_pivot[col] = true;
            rank += 1;
            if rank == m {
                break;
            }
        }
        if rank < m {
            return Err(Error::InvalidParameter(format!(
                "parity-check matrix has rank {rank} < {m} rows"
            )));
        }
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let row_words = m.div_ceil(64);
        let parity_generator = info_positions
            .iter()
            .map(|&c| {
                let mut bits = vec![0u64; row_words];
                for (r, row) in dense.iter().enumerate() {
                    if row[c / 64] & (1 << (c % 64)) != 0 {
                        bits[r / 64] |= 1 << (r % 64);
                    }
                }
                bits
            })
            .collect();
        Ok(LdpcCode {
            h,
            info_positions,
            parity_positions: pivot_of_row,
            parity_generator,
        })
    }

    /// The shipped n = 1024, k = 512 code, parsed once.
    pub fn shipped() -> &'static LdpcCode {
        static CODE: OnceLock<LdpcCode> = OnceLock::new();
        CODE.get_or_init(|| {
            let h = ParityCheckMatrix::parse_alist(SHIPPED_ALIST).expect("shipped alist parses");
            LdpcCode::from_matrix(h).expect("shipped matrix has full rank")
        })
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.h.n_cols()
    }

    /// Information length.
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch {
                what: "information bits",
                expected: self.k(),
                actual: info.len(),
            });
        }
        let mut acc = vec![0u64; self.parity_positions.len().div_ceil(64)];
        let mut codeword = vec![0u8; self.n()];
        for ((&bit, &pos), gen) in info.iter().zip(&self.info_positions).zip(&self.parity_generator) {
            if bit & 1 == 1 {
                codeword[pos] = 1;
                for (a, g) in acc.iter_mut().zip(gen) {
                    *a ^= g;
                }
            }
        }
        for (r, &pos) in self.parity_positions.iter().enumerate() {
            codeword[pos] = ((acc[r / 64] >> (r % 64)) & 1) as u8;
        }
        Ok(codeword)
    }

    /// Information bits of a codeword.
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }

    /// Number of unsatisfied parity checks; zero iff `bits` is a codeword.
    pub fn syndrome(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.n() {
            return Err(Error::LengthMismatch {
                what: "codeword bits",
                expected: self.n(),
                actual: bits.len(),
            });
        }
        Ok(self.h.syndrome_weight(bits))
    }
}

/// A codeword whose trailing information bits are fixed to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shortened {
    /// Information bits padded with zeros to length `k`.
    pub info: Vec<u8>,
    /// Codeword positions known to the receiver (the padded zeros).
    pub known: Vec<bool>,
}

impl Shortened {
    /// Codeword bits that are actually transmitted, in position order.
    pub fn transmitted(&self, codeword: &[u8]) -> Vec<u8> {
        codeword
            .iter()
            .zip(&self.known)
            .filter(|(_, k)| !**k)
            .map(|(b, _)| *b)
            .collect()
    }

    /// Number of transmitted codeword bits.
    pub fn n_transmitted(&self) -> usize {
        self.known.iter().filter(|k| !**k).count()
    }

    /// Spreads received LLRs back over all codeword positions, giving known
    /// zeros the maximal-confidence LLR.
    pub fn expand_llrs(&self, received: &[f64]) -> Result<Vec<f64>> {
        if received.len() != self.n_transmitted() {
            return Err(Error::LengthMismatch {
                what: "received LLRs",
                expected: self.n_transmitted(),
                actual: received.len(),
            });
        }
        let mut it = received.iter();
        Ok(self
            .known
            .iter()
            .map(|&k| {
                if k {
                    KNOWN_BIT_LLR
                } else {
                    *it.next().expect("length checked")
                }
            })
            .collect())
    }
}

/// Pads `info_bits` (at most `k` bits) with known zeros.
pub fn shorten(info_bits: &[u8], code: &LdpcCode) -> Result<Shortened> {
    let k = code.k();
    if info_bits.len() > k {
        return Err(Error::LengthMismatch {
            what: "shortened information bits",
            expected: k,
            actual: info_bits.len(),
        });
    }
    let mut info = info_bits.to_vec();
    info.resize(k, 0);
    let mut known = vec![false; code.n()];
    for &p in &code.info_positions()[info_bits.len()..] {
        known[p] = true;
    }
    Ok(Shortened { info, known })
}
