//! Additive seasonal-trend decomposition by Loess.
//!
//! The inner loop follows the classic procedure:
//!
//! 1. detrend the series;
//! 2. smooth every cycle-subseries (all Mondays, all Tuesdays, ...) and
//!    extend each by one period on both sides;
//! 3. low-pass filter that cycle series with moving averages of length
//!    `period`, `period`, `3` followed by a degree-1 Loess, and subtract the
//!    result so the seasonal part carries no trend;
//! 4. deseasonalize and smooth with the trend window.
//!
//! Outer loops, when requested, recompute bisquare robustness weights from
//! the remainder and feed them into steps 2 and 4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loess::fit_at;
use crate::scalar::Scalar;

/// How the cycle-subseries are smoothed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SeasonalSmoothing {
    /// Every subseries collapses to its (robustness-weighted) mean, giving a
    /// seasonal pattern that repeats exactly from cycle to cycle.
    Periodic,
    /// Loess over each subseries with `span` points.
    Loess { span: usize, degree: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StlConfig {
    /// Seasonal cycle length; 0 disables the seasonal component.
    pub period: usize,
    /// Trend Loess window, in points.
    pub trend_window: usize,
    pub seasonal: SeasonalSmoothing,
    /// Low-pass Loess window; defaults to the smallest odd number
    /// `>= period`.
    pub lowpass_window: Option<usize>,
    pub inner_loops: usize,
    pub outer_loops: usize,
}

impl Default for StlConfig {
    fn default() -> Self {
        StlConfig::daily()
    }
}

impl StlConfig {
    /// Weekly seasonality with a three-month trend.
    pub fn daily() -> Self {
        StlConfig {
            period: 7,
            trend_window: 91,
            seasonal: SeasonalSmoothing::Periodic,
            lowpass_window: None,
            inner_loops: 2,
            outer_loops: 0,
        }
    }

    /// No seasonality, thirteen-week trend.
    pub fn weekly() -> Self {
        StlConfig { period: 0, trend_window: 13, ..StlConfig::daily() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.period == 1 {
            return Err(Error::InvalidPeriod(1));
        }
        let min_len = if self.period >= 2 { (2 * self.period).max(3) } else { 3 };
        if n < min_len {
            return Err(Error::SeriesTooShort { len: n, min: min_len });
        }
        if self.trend_window < 3 {
            return Err(Error::WindowTooSmall { window: self.trend_window, degree: 1 });
        }
        if let SeasonalSmoothing::Loess { span, degree } = self.seasonal {
            if degree > 2 {
                return Err(Error::InvalidConfig(format!("seasonal degree {degree} > 2")));
            }
            if span < degree + 2 {
                return Err(Error::WindowTooSmall { window: span, degree });
            }
        }
        if let Some(w) = self.lowpass_window {
            if w < 3 {
                return Err(Error::WindowTooSmall { window: w, degree: 1 });
            }
        }
        if self.inner_loops == 0 {
            return Err(Error::InvalidConfig("inner_loops must be at least 1".into()));
        }
        Ok(())
    }

    pub fn decompose<T: Scalar>(&self, series: &[T]) -> Result<Decomposition<T>> {
        let n = series.len();
        self.validate(n)?;
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("STL input contains non-finite values".into()));
        }
        let p = self.period;
        let mut seasonal = vec![T::zero(); n];
        let mut trend = vec![T::zero(); n];
        let mut robustness: Option<Vec<T>> = None;

        for outer in 0..=self.outer_loops {
            for _ in 0..self.inner_loops {
                if p >= 2 {
                    let detrended: Vec<T> = series.iter().zip(&trend).map(|(&y, &t)| y - t).collect();
                    let cycle = self.smooth_cycle_subseries(&detrended, robustness.as_deref());
                    let low = self.low_pass(&cycle);
                    for t in 0..n {
                        seasonal[t] = cycle[p + t] - low[t];
                    }
                }
                let deseasoned: Vec<T> = series.iter().zip(&seasonal).map(|(&y, &s)| y - s).collect();
                for (i, out) in trend.iter_mut().enumerate() {
                    let x0 = T::from_usize_lossy(i);
                    *out = fit_at(&deseasoned, robustness.as_deref(), x0, self.trend_window, 1)
                        .or_else(|| fit_at(&deseasoned, None, x0, self.trend_window, 1))
                        .expect("unweighted trend fit has positive weights");
                }
            }
            if outer < self.outer_loops {
                let residual: Vec<T> = (0..n).map(|t| series[t] - seasonal[t] - trend[t]).collect();
                robustness = Some(bisquare_weights(&residual));
            }
        }

        let remainder = (0..n).map(|t| series[t] - (seasonal[t] + trend[t])).collect();
        Ok(Decomposition { observed: series.to_vec(), seasonal, trend, remainder, period: p })
    }

    /// Returns the smoothed cycle-subseries laid out over `n + 2 * period`
    /// positions, i.e. one extra cycle on each side.
    fn smooth_cycle_subseries<T: Scalar>(&self, y: &[T], robustness: Option<&[T]>) -> Vec<T> {
        let p = self.period;
        let n = y.len();
        let mut cycle = vec![T::zero(); n + 2 * p];
        for phase in 0..p {
            let sub: Vec<T> = y.iter().skip(phase).step_by(p).copied().collect();
            let sub_rw: Option<Vec<T>> = robustness.map(|rw| rw.iter().skip(phase).step_by(p).copied().collect());
            let m = sub.len();
            let values: Vec<T> = match self.seasonal {
                SeasonalSmoothing::Periodic => {
                    let level = weighted_mean(&sub, sub_rw.as_deref());
                    vec![level; m + 2]
                }
                SeasonalSmoothing::Loess { span, degree } => (0..m + 2)
                    .map(|j| {
                        let x0 = T::from_usize_lossy(j) - T::one();
                        fit_at(&sub, sub_rw.as_deref(), x0, span, degree)
                            .or_else(|| fit_at(&sub, None, x0, span, degree))
                            .expect("unweighted subseries fit has positive weights")
                    })
                    .collect(),
            };
            for (j, v) in values.into_iter().enumerate() {
                cycle[j * p + phase] = v;
            }
        }
        cycle
    }

    fn low_pass<T: Scalar>(&self, cycle: &[T]) -> Vec<T> {
        let p = self.period;
        let smoothed = moving_average(&moving_average(&moving_average(cycle, p), p), 3);
        let window = self.lowpass_window.unwrap_or(if p % 2 == 1 { p } else { p + 1 }).max(3);
        (0..smoothed.len())
            .map(|i| {
                fit_at(&smoothed, None, T::from_usize_lossy(i), window, 1)
                    .expect("unweighted low-pass fit has positive weights")
            })
            .collect()
    }
}

/// Decomposes `series` with periodic seasonal smoothing and the automatic
/// low-pass window.
pub fn stl_decompose<T: Scalar>(
    series: &[T],
    period: usize,
    trend_window: usize,
    inner_loops: usize,
    outer_loops: usize,
) -> Result<Decomposition<T>> {
    StlConfig { period, trend_window, inner_loops, outer_loops, ..StlConfig::daily() }.decompose(series)
}

/// `observed = seasonal + trend + remainder` at every position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<T> {
    pub observed: Vec<T>,
    pub seasonal: Vec<T>,
    pub trend: Vec<T>,
    pub remainder: Vec<T>,
    pub period: usize,
}

impl<T: Scalar> Decomposition<T> {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// Largest absolute deviation from the additive identity.
    pub fn max_recomposition_error(&self) -> T {
        (0..self.len())
            .map(|t| (self.observed[t] - (self.seasonal[t] + self.trend[t] + self.remainder[t])).abs())
            .fold(T::zero(), T::max)
    }
}

fn moving_average<T: Scalar>(x: &[T], len: usize) -> Vec<T> {
    if len == 0 || x.len() < len {
        return Vec::new();
    }
    let width = T::from_usize_lossy(len);
    let mut sum: T = x[..len].iter().copied().sum();
    let mut out = Vec::with_capacity(x.len() - len + 1);
    out.push(sum / width);
    for i in len..x.len() {
        sum = sum + x[i] - x[i - len];
        out.push(sum / width);
    }
    out
}

fn weighted_mean<T: Scalar>(y: &[T], w: Option<&[T]>) -> T {
    match w {
        Some(w) => {
            let total: T = w.iter().copied().sum();
            if total > T::zero() {
                y.iter().zip(w).map(|(&v, &wi)| v * wi).sum::<T>() / total
            } else {
                weighted_mean(y, None)
            }
        }
        None => y.iter().copied().sum::<T>() / T::from_usize_lossy(y.len()),
    }
}

/// Bisquare weights on `|r| / (6 * median|r|)`.
fn bisquare_weights<T: Scalar>(residual: &[T]) -> Vec<T> {
    let mut abs: Vec<T> = residual.iter().map(|r| r.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let n = abs.len();
    let median = if n % 2 == 1 { abs[n / 2] } else { (abs[n / 2 - 1] + abs[n / 2]) / T::lit(2.0) };
    let h = T::lit(6.0) * median;
    let (lo, hi) = (T::lit(0.001) * h, T::lit(0.999) * h);
    residual
        .iter()
        .map(|r| {
            let a = r.abs();
            if a <= lo {
                T::one()
            } else if a > hi {
                T::zero()
            } else {
                let u = a / h;
                let t = T::one() - u * u;
                t * t
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATTERN: [f64; 7] = [3.0, -1.0, 0.5, -2.0, 1.5, -0.5, -1.5];

    fn periodic(len: usize) -> Vec<f64> {
        (0..len).map(|t| PATTERN[t % 7]).collect()
    }

    #[test]
    fn pattern_has_zero_mean() {
        assert_eq!(PATTERN.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn constant_series() {
        let d = stl_decompose(&[2.5f64; 60], 7, 91, 2, 0).unwrap();
        assert!(d.seasonal.iter().all(|v| v.abs() < 1e-9));
        assert!(d.trend.iter().all(|v| (v - 2.5).abs() < 1e-9));
        assert!(d.remainder.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn pure_periodic_signal() {
        let y = periodic(98);
        let d = stl_decompose(&y, 7, 91, 2, 0).unwrap();
        let max_rem = d.remainder.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_trend = d.trend.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_rem <= 1e-6, "{max_rem}");
        assert!(max_trend <= 1e-6, "{max_trend}");
        for t in 7..98 {
            assert!((d.seasonal[t] - d.seasonal[t - 7]).abs() < 1e-6);
        }
    }

    #[test]
    fn loess_seasonal_mode_recovers_periodic_signal() {
        let y = periodic(98);
        let cfg = StlConfig { seasonal: SeasonalSmoothing::Loess { span: 7, degree: 1 }, ..StlConfig::daily() };
        let d = cfg.decompose(&y).unwrap();
        assert!(d.remainder.iter().all(|v| v.abs() < 1e-6));
        assert!(d.max_recomposition_error() <= 1e-12);
    }

    #[test]
    fn disabled_seasonality() {
        let y: Vec<f64> = (0..30).map(|t| (t as f64 * 0.7).sin()).collect();
        let d = stl_decompose(&y, 0, 13, 2, 0).unwrap();
        assert!(d.seasonal.iter().all(|&v| v == 0.0));
        assert!(d.max_recomposition_error() <= 1e-12);
    }

    #[test]
    fn robust_loops_downweight_spike() {
        let mut y = periodic(120);
        y[60] += 50.0;
        let plain = stl_decompose(&y, 7, 31, 2, 0).unwrap();
        let robust = stl_decompose(&y, 7, 31, 2, 5).unwrap();
        assert!(robust.remainder[60] > plain.remainder[60]);
        assert!(robust.max_recomposition_error() <= 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(stl_decompose(&[1.0; 13], 7, 91, 2, 0), Err(Error::SeriesTooShort { .. })));
        assert!(matches!(stl_decompose(&[1.0; 20], 1, 91, 2, 0), Err(Error::InvalidPeriod(1))));
        assert!(matches!(stl_decompose(&[1.0; 20], 7, 2, 2, 0), Err(Error::WindowTooSmall { .. })));
        assert!(stl_decompose(&[1.0; 20], 7, 11, 0, 0).is_err());
        assert!(stl_decompose(&[1.0, f64::NAN, 1.0, 1.0], 0, 5, 1, 0).is_err());
    }

    #[test]
    fn moving_average_lengths() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let ma = moving_average(&x, 3);
        assert_eq!(ma.len(), 8);
        assert_eq!(ma[0], 1.0);
        assert_eq!(ma[7], 8.0);
    }

    #[test]
    fn f32_decomposition() {
        let y: Vec<f32> = periodic(42).into_iter().map(|v| v as f32 + 1.0).collect();
        let d = stl_decompose(&y, 7, 15, 2, 0).unwrap();
        assert!(d.max_recomposition_error() <= 1e-5);
    }
}
