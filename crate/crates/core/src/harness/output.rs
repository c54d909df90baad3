//! CSV and JSON result files.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `snr_db` | receive SNR of the dominant path per RE, dB |
//! | `mode` | `hybrid`, `comm_centric`, `pilots_only` or `genie_aided` |
//! | `gamma_tar_db` | mean target SNR (linear mean over realizations), dB |
//! | `gamma_tar_ci_db` | 95 % half-width of that mean, dB above it |
//! | `p_md` | missed targets / all targets |
//! | `p_md_ci` | 95 % half-width over realizations |
//! | `ser` | mean symbol error rate over data REs, `NA` if nothing is decoded |
//! | `ser_ci` | 95 % half-width, `NA` likewise |
//! | `bler_s` | sensing-grid stream block error rate, `NA` without that stream |
//! | `bler_r` | regular stream block error rate, `NA` without decoding |
//! | `n_real` | realizations |
//! | `codewords_s`, `codewords_r` | decoded codewords per stream |
//!
//! Reals carry six significant digits.

use std::path::Path;

use serde_json::json;

use super::{SweepConfig, SweepRecord};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "snr_db",
    "mode",
    "gamma_tar_db",
    "gamma_tar_ci_db",
    "p_md",
    "p_md_ci",
    "ser",
    "ser_ci",
    "bler_s",
    "bler_r",
    "n_real",
    "codewords_s",
    "codewords_r",
];

const NA: &str = "NA";

/// Six significant digits: fixed notation for moderate magnitudes,
/// scientific otherwise, trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), format_sig6)
}

/// Writes `records` as CSV (header first, even when empty).
pub fn write_results(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            format_sig6(r.snr_db),
            r.mode.to_string(),
            format_sig6(r.gamma_tar_db),
            format_sig6(r.gamma_tar_ci_db),
            format_sig6(r.p_md),
            format_sig6(r.p_md_ci),
            opt(r.ser),
            opt(r.ser_ci),
            opt(r.bler_s),
            opt(r.bler_r),
            r.n_real.to_string(),
            r.codewords_s.to_string(),
            r.codewords_r.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_results`].
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let bad = |field: &str, v: &str| Error::Config(format!("bad {field} value `{v}`"));
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> { row[i].parse().map_err(|_| bad(CSV_HEADER[i], &row[i])) };
        let o = |i: usize| -> Result<Option<f64>> {
            if &row[i] == NA {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let u = |i: usize| -> Result<usize> { row[i].parse().map_err(|_| bad(CSV_HEADER[i], &row[i])) };
        out.push(SweepRecord {
            snr_db: f(0)?,
            mode: row[1].parse()?,
            gamma_tar_db: f(2)?,
            gamma_tar_ci_db: f(3)?,
            p_md: f(4)?,
            p_md_ci: f(5)?,
            ser: o(6)?,
            ser_ci: o(7)?,
            bler_s: o(8)?,
            bler_r: o(9)?,
            n_real: u(10)?,
            codewords_s: u(11)?,
            codewords_r: u(12)?,
        });
    }
    Ok(out)
}

/// JSON summary: the configuration, the metric definitions and the records.
pub fn write_summary(cfg: &SweepConfig, records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = json!({
        "generator": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        "definitions": {
            "snr_db": "per-RE receive SNR of the dominant path, |alpha_0|^2 / sigma^2",
            "gamma_tar_db": "10 log10 of the mean of per-realization linear target SNRs",
            "p_md": "missed targets / (targets x realizations)",
            "ser": "mean per-frame symbol error rate over coded data REs",
        },
        "config": cfg,
        "records": records,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::AllocationMode;

    fn record(mode: AllocationMode, ser: Option<f64>) -> SweepRecord {
        SweepRecord {
            snr_db: -3.5,
            mode,
            gamma_tar_db: 12.3456789,
            gamma_tar_ci_db: 0.25,
            p_md: 0.4,
            p_md_ci: 0.1,
            ser,
            ser_ci: ser.map(|_| 0.01),
            bler_s: None,
            bler_r: Some(1e-7),
            n_real: 20,
            codewords_s: 0,
            codewords_r: 1680,
        }
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(1.9375), "1.9375");
        assert_eq!(format_sig6(12.3456789), "12.3457");
        assert_eq!(format_sig6(-0.000123456789), "-0.000123457");
        assert_eq!(format_sig6(1e-7), "1e-7");
        assert_eq!(format_sig6(123456789.0), "1.23457e8");
        assert_eq!(format_sig6(100.0), "100");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(999999.7), "1e6");
    }

    #[test]
    fn empty_records_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), CSV_HEADER.join(",") + "\n");
        assert!(read_results(&path).unwrap().is_empty());
    }

    #[test]
    fn round_trip_with_na() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = vec![
            record(AllocationMode::Hybrid, Some(0.125)),
            record(AllocationMode::PilotsOnly, None),
        ];
        write_results(&records, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].ser, None);
        assert_eq!(back[0].ser, Some(0.125));
        assert_eq!(back[0].gamma_tar_db, 12.3457);
        assert_eq!(back[0].bler_r, Some(1e-7));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(2).unwrap().contains(",pilots_only,"));
        assert!(text.lines().nth(2).unwrap().contains(",NA,NA,NA,"));
    }

    #[test]
    fn summary_is_valid_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        write_summary(
            &SweepConfig::desk(),
            &[record(AllocationMode::Hybrid, Some(0.0))],
            &path,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["records"][0]["mode"], "hybrid");
        assert_eq!(v["config"]["frame"]["n_subcarriers"], 192);
    }
}
