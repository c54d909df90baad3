//! Frame grids: `N` subcarriers by `M` OFDM symbols, indexed `[subcarrier, symbol]`.

use ndarray::Array2;
use num_complex::Complex64;

/// Complex N x M frame (TX frame, received frame, channel response or estimate).
pub type FrameGrid = Array2<Complex64>;

/// Iterates `(subcarrier, symbol)` pairs in frequency-major order: all
/// subcarriers of symbol 0, then all subcarriers of symbol 1, and so on.
pub fn scan_order(n_sub: usize, n_sym: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_sym).flat_map(move |m| (0..n_sub).map(move |n| (n, m)))
}

/// Element-wise `num / den`, failing on the first exactly-zero divisor.
pub fn divide(num: &FrameGrid, den: &FrameGrid) -> crate::Result<FrameGrid> {
    if num.dim() != den.dim() {
        return Err(crate::Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            num.dim(),
            den.dim()
        )));
    }
    if let Some(((n, m), _)) = den.indexed_iter().find(|(_, v)| **v == Complex64::new(0.0, 0.0)) {
        return Err(crate::Error::ZeroDivisor {
            subcarrier: n,
            symbol: m,
        });
    }
    Ok(ndarray::Zip::from(num).and(den).map_collect(|a, b| a / b))
}
