//! Asymptotic form `A mu^N N^theta (1 + c N^-Delta + k osc(N) N^-alpha)` and
//! its log-residual objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::series::{ln_bigint, SeriesTable};

/// Series being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Z,
    P,
}

impl Target {
    /// Walk counts alternate; the distance sums only get an even-`N` term.
    pub fn default_oscillation(self) -> Oscillation {
        match self {
            Target::Z => Oscillation::Alternating,
            Target::P => Oscillation::EvenOnly,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Z => "z",
            Target::P => "p",
        })
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(Target::Z),
            "p" => Ok(Target::P),
            _ => Err(format!("unknown target '{s}' (expected z or p)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oscillation {
    /// `(-1)^N`
    Alternating,
    /// `(1 + (-1)^N) / 2`
    EvenOnly,
}

impl Oscillation {
    pub fn at(self, n: u32) -> f64 {
        let even = n.is_multiple_of(2);
        match (self, even) {
            (Oscillation::Alternating, true) => 1.0,
            (Oscillation::Alternating, false) => -1.0,
            (Oscillation::EvenOnly, true) => 1.0,
            (Oscillation::EvenOnly, false) => 0.0,
        }
    }
}

impl FromStr for Oscillation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alternating" => Ok(Oscillation::Alternating),
            "even-only" => Ok(Oscillation::EvenOnly),
            _ => Err(format!("unknown oscillation '{s}' (expected alternating or even-only)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    #[serde(rename = "A")]
    pub a: f64,
    pub mu: f64,
    pub theta: f64,
    pub c: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub k: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

/// Bounds that keep the objective finite on short series.
pub const MU_BOUNDS: (f64, f64) = (1.0, 10.0);
pub const EXPONENT_BOUNDS: (f64, f64) = (0.01, 10.0);

impl FitParams {
    /// Parameters without an achieved residual.
    pub fn new(a: f64, mu: f64, theta: f64, c: f64, delta: f64, k: f64, alpha: f64) -> FitParams {
        FitParams { a, mu, theta, c, delta, k, alpha, epsilon: 0.0 }
    }

    pub fn in_bounds(&self) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v > lo && v < hi;
        self.a > 0.0
            && inside(self.mu, MU_BOUNDS)
            && inside(self.delta, EXPONENT_BOUNDS)
            && inside(self.alpha, EXPONENT_BOUNDS)
            && [self.theta, self.c, self.k].iter().all(|v| v.is_finite())
    }
}

/// Natural log of the model value; `None` where the correction factor is
/// not positive.
pub fn ln_model(p: &FitParams, n: u32, osc: Oscillation) -> Option<f64> {
    let nf = n as f64;
    let corr = p.c * nf.powf(-p.delta) + p.k * osc.at(n) * nf.powf(-p.alpha);
    if corr <= -1.0 || !corr.is_finite() {
        return None;
    }
    Some(p.a.ln() + nf * p.mu.ln() + p.theta * nf.ln() + corr.ln_1p())
}

pub fn eval_model(p: &FitParams, n: u32, osc: Oscillation) -> f64 {
    let nf = n as f64;
    p.a * p.mu.powf(nf) * nf.powf(p.theta) * (1.0 + p.c * nf.powf(-p.delta) + p.k * osc.at(n) * nf.powf(-p.alpha))
}

/// Compensated (Neumaier) sum.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `(N, ln value)` for the target series over `lo..=hi`; every row must be
/// present.
pub fn log_data(t: &SeriesTable, (lo, hi): (u32, u32), target: Target) -> Result<Vec<(u32, f64)>, AnalysisError> {
    if lo < 1 || lo > hi {
        return Err(AnalysisError::BadRange(lo, hi));
    }
    (lo..=hi)
        .map(|n| {
            let r = t.get(n).ok_or(AnalysisError::MissingRange { lo, hi, missing: n })?;
            let v = match target {
                Target::Z => &r.z,
                Target::P => &r.p,
            };
            Ok((n, ln_bigint(v)))
        })
        .collect()
}

/// `sum (ln model - ln data)^2`; infinite where the model is undefined.
pub fn objective(p: &FitParams, data: &[(u32, f64)], osc: Oscillation) -> f64 {
    let mut terms = Vec::with_capacity(data.len());
    for &(n, y) in data {
        match ln_model(p, n, osc) {
            Some(m) => terms.push((m - y) * (m - y)),
            None => return f64::INFINITY,
        }
    }
    neumaier_sum(terms)
}

/// Objective of `p` over a table range.
pub fn epsilon(p: &FitParams, t: &SeriesTable, range: (u32, u32), target: Target, osc: Oscillation) -> Result<f64, AnalysisError> {
    Ok(objective(p, &log_data(t, range, target)?, osc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrections_off_is_pure_power_law() {
        let p = FitParams::new(1.5, 4.0, 0.25, 0.0, 1.0, 0.0, 2.0);
        for n in [1u32, 7, 20] {
            let pure = 1.5 * 4f64.powi(n as i32) * (n as f64).powf(0.25);
            assert!((eval_model(&p, n, Oscillation::Alternating) / pure - 1.0).abs() < 1e-14);
            assert!((ln_model(&p, n, Oscillation::EvenOnly).unwrap() - pure.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn even_only_vanishes_at_odd_n() {
        let p = FitParams::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.7, 1.0);
        assert_eq!(eval_model(&p, 5, Oscillation::EvenOnly), 32.0);
        assert!((eval_model(&p, 4, Oscillation::EvenOnly) - 16.0 * (1.0 + 0.7 / 4.0)).abs() < 1e-12);
        assert!((eval_model(&p, 5, Oscillation::Alternating) - 32.0 * (1.0 - 0.7 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn undefined_correction_is_infinite() {
        let p = FitParams::new(1.0, 2.0, 0.0, -2.0, 0.5, 0.0, 1.0);
        assert_eq!(ln_model(&p, 1, Oscillation::Alternating), None);
        assert_eq!(objective(&p, &[(1, 0.0)], Oscillation::Alternating), f64::INFINITY);
    }

    #[test]
    fn compensated_sum() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(neumaier_sum(v), 2e-16);
    }

    #[test]
    fn range_checks() {
        let t = SeriesTable::reference();
        assert!(log_data(&t, (18, 36), Target::Z).unwrap().len() == 19);
        assert!(matches!(log_data(&t, (30, 40), Target::Z), Err(AnalysisError::MissingRange { missing: 37, .. })));
        assert!(log_data(&t, (5, 4), Target::P).is_err());
    }
}
