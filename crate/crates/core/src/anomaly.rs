//! IQR outlier detection on an STL remainder.
//!
//! Limits are `Q1 - k * IQR` and `Q3 + k * IQR` with `k = k(alpha)`. A point
//! is a candidate when its remainder lies strictly outside them; at most
//! `ceil(max_anoms * n)` candidates are kept, the farthest beyond their
//! violated limit first. Limits are then recomposed onto the observed scale
//! by adding back the seasonal and trend components.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::DeltaSeries;
use crate::stl::Decomposition;

/// Empirical quantile by linear interpolation between order statistics at
/// (1-based) rank `h = (n - 1) p + 1`.
pub fn quantile<T: Scalar>(sample: &[T], p: f64) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidSeries("quantile sample contains NaN".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + T::lit(frac) * (sorted[lo + 1] - sorted[lo])
}

/// How the IQR multiplier depends on `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ThresholdRule {
    /// `k = numerator / alpha`.
    Inverse { numerator: f64 },
    /// `k` fixed regardless of `alpha`.
    Constant { k: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyConfig {
    pub alpha: f64,
    /// Largest fraction of points that may be flagged.
    pub max_anoms: f64,
    pub threshold: ThresholdRule,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        AnomalyConfig { alpha: 0.05, max_anoms: 0.10, threshold: ThresholdRule::Inverse { numerator: 0.15 } }
    }
}

impl AnomalyConfig {
    pub fn new(alpha: f64, max_anoms: f64) -> Self {
        AnomalyConfig { alpha, max_anoms, ..Default::default() }
    }

    /// The IQR multiplier. `k(0.05) = 3` under the default rule.
    pub fn k(&self) -> f64 {
        match self.threshold {
            // Snapped to 12 decimals: 0.15 / 0.05 is 2.9999999999999996 in binary.
            ThresholdRule::Inverse { numerator } => (numerator / self.alpha * 1e12).round() / 1e12,
            ThresholdRule::Constant { k } => k,
        }
    }

    /// Maximum number of anomalies for a series of length `n`.
    pub fn cap(&self, n: usize) -> usize {
        // The epsilon keeps e.g. 0.1 * 70 = 7.000000000000001 from rounding up.
        ((self.max_anoms * n as f64) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if !(self.max_anoms > 0.0 && self.max_anoms <= 1.0) {
            return Err(Error::InvalidConfig(format!("max_anoms {} not in (0, 1]", self.max_anoms)));
        }
        let k = self.k();
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidConfig(format!("threshold multiplier {k} must be positive")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalySign {
    Positive,
    Negative,
    #[default]
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyPoint<T> {
    pub remainder: T,
    pub lower: T,
    pub upper: T,
    pub recomposed_lower: T,
    pub recomposed_upper: T,
    pub is_anomaly: bool,
    /// `None` until [`sign_anomalies`] has run, and for regular points.
    pub sign: AnomalySign,
    /// 1 for the most extreme retained anomaly.
    pub severity_rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyResult<T> {
    pub q1: T,
    pub q3: T,
    pub iqr: T,
    pub k: T,
    pub lower: T,
    pub upper: T,
    /// Points strictly outside the limits before the cap was applied.
    pub candidates: usize,
    pub cap: usize,
    pub points: Vec<AnomalyPoint<T>>,
    /// Set by [`sign_anomalies`].
    pub dates: Option<Vec<NaiveDate>>,
}

impl<T: Scalar> AnomalyResult<T> {
    pub fn anomaly_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_anomaly).count()
    }

    pub fn anomaly_indices(&self) -> Vec<usize> {
        self.points.iter().enumerate().filter_map(|(i, p)| p.is_anomaly.then_some(i)).collect()
    }

    /// True when the cap discarded at least one candidate.
    pub fn cap_binding(&self) -> bool {
        self.candidates > self.cap
    }
}

pub fn detect_anomalies<T: Scalar>(
    decomposition: &Decomposition<T>,
    config: &AnomalyConfig,
) -> Result<AnomalyResult<T>> {
    config.validate()?;
    let n = decomposition.len();
    if n < 4 {
        return Err(Error::SeriesTooShort { len: n, min: 4 });
    }
    let remainder = &decomposition.remainder;
    let mut sorted = remainder.clone();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidSeries("remainder contains NaN".into()));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let k = T::lit(config.k());
    let lower = q1 - k * iqr;
    let upper = q3 + k * iqr;

    let mut candidates: Vec<(usize, T)> = remainder
        .iter()
        .enumerate()
        .filter_map(|(i, &r)| {
            if r < lower {
                Some((i, lower - r))
            } else if r > upper {
                Some((i, r - upper))
            } else {
                None
            }
        })
        .collect();
    let n_candidates = candidates.len();
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite distances").then(a.0.cmp(&b.0)));
    let cap = config.cap(n);

    let mut points: Vec<AnomalyPoint<T>> = (0..n)
        .map(|t| {
            let base = decomposition.seasonal[t] + decomposition.trend[t];
            AnomalyPoint {
                remainder: remainder[t],
                lower,
                upper,
                recomposed_lower: base + lower,
                recomposed_upper: base + upper,
                is_anomaly: false,
                sign: AnomalySign::None,
                severity_rank: None,
            }
        })
        .collect();
    for (rank, &(i, _)) in candidates.iter().take(cap).enumerate() {
        points[i].is_anomaly = true;
        points[i].severity_rank = Some(rank + 1);
    }

    Ok(AnomalyResult { q1, q3, iqr, k, lower, upper, candidates: n_candidates, cap, points, dates: None })
}

/// Gives every anomaly the sign of the delta at its timestamp. Anomalies
/// where the delta is exactly zero are turned back into regular points.
pub fn sign_anomalies<T: Scalar>(mut result: AnomalyResult<T>, delta: &DeltaSeries<T>) -> Result<AnomalyResult<T>> {
    if result.points.len() != delta.len() {
        return Err(Error::TimestampMismatch);
    }
    let dates = delta.dates();
    if let Some(existing) = &result.dates {
        if *existing != dates {
            return Err(Error::TimestampMismatch);
        }
    }
    for (p, d) in result.points.iter_mut().zip(&delta.points) {
        if !p.is_anomaly {
            p.sign = AnomalySign::None;
            continue;
        }
        if d.delta > T::zero() {
            p.sign = AnomalySign::Positive;
        } else if d.delta < T::zero() {
            p.sign = AnomalySign::Negative;
        } else {
            p.is_anomaly = false;
            p.sign = AnomalySign::None;
            p.severity_rank = None;
        }
    }
    result.dates = Some(dates);
    Ok(result)
}
