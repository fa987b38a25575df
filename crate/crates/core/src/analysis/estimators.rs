//! Finite-`N` exponent estimators computed from exact ratios of table rows.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::AnalysisError;
use crate::series::{ln_bigint, SeriesRow, SeriesTable};

/// `a / b` as a double, correctly scaled even when both are huge.
fn ratio_f64(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    // 80 quotient bits leave margin for the final rounding to 53
    let shift = 80i64 + b.bits() as i64 - a.abs().bits() as i64;
    let q = if shift >= 0 { (a << shift as u64) / b } else { a / (b << (-shift) as u64) };
    q.to_f64().expect("finite") * 2f64.powi(-shift as i32)
}

/// `ln(num / den)` for positive integers, accurate when the ratio is close
/// to one.
pub fn ln_ratio(num: &BigInt, den: &BigInt) -> f64 {
    assert!(num.is_positive() && den.is_positive());
    let diff = num - den;
    let x = ratio_f64(&diff, den);
    if x.abs() < 0.5 {
        x.ln_1p()
    } else {
        ln_bigint(num) - ln_bigint(den)
    }
}

fn row<'a>(t: &'a SeriesTable, rule: &str, lo: i64, hi: i64, need: i64) -> Result<&'a SeriesRow, AnalysisError> {
    let missing = || AnalysisError::MissingRow {
        rule: rule.to_string(),
        lo,
        hi,
        missing: need,
    };
    if need < 1 || need > u32::MAX as i64 {
        return Err(missing());
    }
    t.get(need as u32).ok_or_else(missing)
}

/// `((N^2 - 4) / 4) ln(Z_N^2 / (Z_{N+2} Z_{N-2}))`, using rows of the same
/// parity as `N`.
pub fn theta_estimate(t: &SeriesTable, n: i64) -> Result<f64, AnalysisError> {
    let (lo, hi) = (n - 2, n + 2);
    let zm = &row(t, "parity rule", lo, hi, lo)?.z;
    let zp = &row(t, "parity rule", lo, hi, hi)?.z;
    let z = &row(t, "parity rule", lo, hi, n)?.z;
    let nf = n as f64;
    Ok((nf * nf - 4.0) / 4.0 * ln_ratio(&(z * z), &(zp * zm)))
}

/// `((N - 1) / 4) (ln(P_{N+1}/Z_{N+1}) - ln(P_{N-1}/Z_{N-1}))`.
pub fn nu_estimate(t: &SeriesTable, n: i64) -> Result<f64, AnalysisError> {
    let (lo, hi) = (n - 1, n + 1);
    let a = row(t, "neighbour rule", lo, hi, lo)?;
    let b = row(t, "neighbour rule", lo, hi, hi)?;
    Ok((n as f64 - 1.0) / 4.0 * ln_ratio(&(&b.p * &a.z), &(&b.z * &a.p)))
}

/// `(N, estimate)` for every `N` the table supports.
pub fn estimate_column(t: &SeriesTable, f: fn(&SeriesTable, i64) -> Result<f64, AnalysisError>) -> Vec<(u32, f64)> {
    t.rows().iter().filter_map(|r| f(t, r.n as i64).ok().map(|v| (r.n, v))).collect()
}
