//! Flooding-schedule belief propagation with syndrome-based early stopping.

use serde::{Deserialize, Serialize};

use super::{LdpcCode, DEFAULT_MAX_ITERATIONS};
use crate::{Error, Result};

/// Largest check-to-variable message magnitude, keeps `atanh` finite.
const MAX_CHECK_MESSAGE: f64 = 60.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BpAlgorithm {
    /// Sum-product with the hyperbolic-tangent check update.
    #[default]
    SumProduct,
    /// Min-sum with the check messages scaled by `factor`.
    NormalizedMinSum { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Hard decision on every codeword bit.
    pub bits: Vec<u8>,
    /// The hard decision satisfies every parity check.
    pub converged: bool,
    /// Message-passing iterations run; 0 if the channel decision was already a codeword.
    pub iterations: usize,
}

/// Tanner-graph decoder for one code. Holds no per-decode state, so a single
/// instance can be shared across threads.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    n: usize,
    /// Edge range of each check, edges numbered check by check.
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edges of each variable, grouped by variable.
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
    algorithm: BpAlgorithm,
    max_iterations: usize,
}

impl BpDecoder {
    pub fn new(code: &LdpcCode, algorithm: BpAlgorithm, max_iterations: usize) -> Self {
        let h = code.matrix();
        let mut check_ptr = vec![0];
        let mut edge_var = Vec::with_capacity(h.n_edges());
        for row in h.rows() {
            edge_var.extend_from_slice(row);
            check_ptr.push(edge_var.len());
        }
        let mut var_lists = vec![Vec::new(); h.n_cols()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_lists[v].push(e);
        }
        let mut var_ptr = vec![0];
        let mut var_edges = Vec::with_capacity(edge_var.len());
        for list in var_lists {
            var_edges.extend(list);
            var_ptr.push(var_edges.len());
        }
        BpDecoder {
            n: h.n_cols(),
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
            algorithm,
            max_iterations,
        }
    }

    /// Sum-product decoder with the default iteration budget.
    pub fn standard(code: &LdpcCode) -> Self {
        Self::new(code, BpAlgorithm::SumProduct, DEFAULT_MAX_ITERATIONS)
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.check_ptr
            .windows(2)
            .all(|w| self.edge_var[w[0]..w[1]].iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0)
    }

    fn check_update(&self, v2c: &[f64], c2v: &mut [f64], scratch: &mut Vec<f64>) {
        for w in self.check_ptr.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            match self.algorithm {
                BpAlgorithm::SumProduct => {
                    // Leave-one-out products via prefix and suffix passes.
                    scratch.clear();
                    scratch.extend(v2c[lo..hi].iter().map(|m| (0.5 * m).tanh()));
                    let mut prefix = 1.0;
                    for e in lo..hi {
                        c2v[e] = prefix;
                        prefix *= scratch[e - lo];
                    }
                    let mut suffix = 1.0;
                    for e in (lo..hi).rev() {
                        let p = c2v[e] * suffix;
                        suffix *= scratch[e - lo];
                        c2v[e] = (2.0 * p.atanh()).clamp(-MAX_CHECK_MESSAGE, MAX_CHECK_MESSAGE);
                    }
                }
                BpAlgorithm::NormalizedMinSum { factor } => {
                    let mut sign = 1.0f64;
                    let (mut min1, mut min2, mut arg_min) = (f64::INFINITY, f64::INFINITY, lo);
                    for (e, &m) in (lo..hi).zip(&v2c[lo..hi]) {
                        if m < 0.0 {
                            sign = -sign;
                        }
                        let a = m.abs();
                        if a < min1 {
                            min2 = min1;
                            min1 = a;
                            arg_min = e;
                        } else if a < min2 {
                            min2 = a;
                        }
                    }
                    for e in lo..hi {
                        let own_sign = if v2c[e] < 0.0 { -1.0 } else { 1.0 };
                        let mag = if e == arg_min { min2 } else { min1 };
                        c2v[e] = factor * sign * own_sign * mag.min(MAX_CHECK_MESSAGE);
                    }
                }
            }
        }
    }

    /// Decodes channel LLRs (`ln P(0)/P(1)`) of all `n` codeword bits.
    pub fn decode(&self, llrs: &[f64]) -> Result<DecodeResult> {
        if llrs.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "decoder LLRs",
                expected: self.n,
                actual: llrs.len(),
            });
        }
        let mut bits: Vec<u8> = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.syndrome_ok(&bits) {
            return Ok(DecodeResult {
                bits,
                converged: true,
                iterations: 0,
            });
        }
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| llrs[v]).collect();
        let mut c2v = vec![0.0; v2c.len()];
        let mut scratch = Vec::new();
        for iteration in 1..=self.max_iterations {
            self.check_update(&v2c, &mut c2v, &mut scratch);
            for v in 0..self.n {
                let edges = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
                let total = llrs[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
                for &e in edges {
                    v2c[e] = total - c2v[e];
                }
                bits[v] = u8::from(total < 0.0);
            }
            if self.syndrome_ok(&bits) {
                return Ok(DecodeResult {
                    bits,
                    converged: true,
                    iterations: iteration,
                });
            }
        }
        Ok(DecodeResult {
            bits,
            converged: false,
            iterations: self.max_iterations,
        })
    }
}
