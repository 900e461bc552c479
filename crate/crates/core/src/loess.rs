//! Locally weighted polynomial regression with tricube weights.
//!
//! Observations sit at integer positions `0..n`. A fit at position `x0` uses
//! the `q` nearest observations; the bandwidth `h` is the distance to the
//! farthest of them (stretched by `(q - n) / 2` when `q > n`), and each
//! observation at distance `d < h` is weighted by `(1 - (d/h)^3)^3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Window size of a Loess fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Span {
    /// Fraction of the series length; resolved as `ceil(f * n)`.
    Fraction(f64),
    /// Absolute number of points.
    Points(usize),
}

impl Span {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Span::Fraction(f) => (f * n as f64 - 1e-9).ceil().max(0.0) as usize,
            Span::Points(q) => q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoessConfig {
    pub span: Span,
    /// Local polynomial degree, 0 to 2.
    pub degree: usize,
}

impl LoessConfig {
    pub fn new(span: Span, degree: usize) -> Self {
        LoessConfig { span, degree }
    }

    /// Resolves the window for a series of length `n` and validates it.
    pub fn window(&self, n: usize) -> Result<usize> {
        if self.degree > 2 {
            return Err(Error::InvalidConfig(format!("loess degree {} > 2", self.degree)));
        }
        let q = self.span.resolve(n);
        let min = self.degree + 2;
        if q < min {
            return Err(Error::WindowTooSmall { window: q, degree: self.degree });
        }
        if n < min {
            return Err(Error::SeriesTooShort { len: n, min });
        }
        Ok(q)
    }
}

/// Smooths `values` at every integer position.
pub fn loess_smooth<T: Scalar>(values: &[T], config: &LoessConfig) -> Result<Vec<T>> {
    let q = config.window(values.len())?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSeries("loess input contains non-finite values".into()));
    }
    (0..values.len())
        .map(|i| {
            let x0 = T::from_usize_lossy(i);
            fit_at(values, None, x0, q, config.degree).ok_or(Error::DegenerateFit(i as f64))
        })
        .collect()
}

/// Local fit evaluated at `x0`, which may lie outside `0..n`.
///
/// `robustness` multiplies the tricube weights. Returns `None` only when
/// every weight in the window is zero. A singular local design falls back
/// to the weighted mean.
pub(crate) fn fit_at<T: Scalar>(y: &[T], robustness: Option<&[T]>, x0: T, q: usize, degree: usize) -> Option<T> {
    let n = y.len();
    if n == 0 {
        return None;
    }
    let half = T::from_usize_lossy(q.saturating_sub(1)) / T::lit(2.0);
    let (left, right, h) = if q >= n {
        let span = (x0).max(T::from_usize_lossy(n - 1) - x0);
        let stretch = T::from_usize_lossy(q - n) / T::lit(2.0);
        (0, n - 1, span + stretch)
    } else {
        let ideal = (x0 - half).round();
        let max_left = T::from_usize_lossy(n - q);
        let left = ideal.max(T::zero()).min(max_left).to_usize().unwrap_or(0);
        let right = left + q - 1;
        let h = (x0 - T::from_usize_lossy(left)).max(T::from_usize_lossy(right) - x0);
        (left, right, h)
    };
    if h <= T::zero() {
        return None;
    }

    let mut weights = Vec::with_capacity(right - left + 1);
    let mut total = T::zero();
    for j in left..=right {
        let d = (T::from_usize_lossy(j) - x0).abs();
        let mut w = if d < h {
            let r = d / h;
            let t = T::one() - r * r * r;
            t * t * t
        } else {
            T::zero()
        };
        if let Some(rw) = robustness {
            w = w * rw[j];
        }
        total = total + w;
        weights.push(w);
    }
    if total <= T::zero() {
        return None;
    }

    let weighted_mean = || {
        let s: T = (left..=right).map(|j| weights[j - left] * y[j]).sum();
        s / total
    };
    if degree == 0 {
        return Some(weighted_mean());
    }

    // Normal equations in coordinates centred at x0, so the intercept is the
    // fitted value.
    let m = degree + 1;
    let mut moments = vec![T::zero(); 2 * degree + 1];
    let mut rhs = vec![T::zero(); m];
    for j in left..=right {
        let w = weights[j - left];
        if w == T::zero() {
            continue;
        }
        let u = T::from_usize_lossy(j) - x0;
        let mut pow = w;
        for (k, mk) in moments.iter_mut().enumerate() {
            if k < m {
                rhs[k] = rhs[k] + pow * y[j];
            }
            *mk = *mk + pow;
            pow = pow * u;
        }
    }
    let mut a = vec![vec![T::zero(); m + 1]; m];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().take(m).enumerate() {
            *cell = moments[r + c];
        }
        row[m] = rhs[r];
    }
    match solve_intercept(&mut a, h) {
        Some(v) => Some(v),
        None => Some(weighted_mean()),
    }
}

/// Gaussian elimination with partial pivoting on an augmented system;
/// returns the first unknown. `scale` is the bandwidth, used to judge
/// singularity relative to the magnitude of the moments.
fn solve_intercept<T: Scalar>(a: &mut [Vec<T>], scale: T) -> Option<T> {
    let m = a.len();
    let tol = T::epsilon().sqrt() * T::lit(1e-3);
    let total = a[0][0];
    for col in 0..m {
        let pivot =
            (col..m).max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).expect("finite moments"))?;
        // Diagonal entry `col` scales like total weight times h^(2 col).
        let norm = total * scale.powi(2 * col as i32);
        if a[pivot][col].abs() <= tol * norm {
            return None;
        }
        a.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (dst, &src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *dst = *dst - f * src;
            }
        }
    }
    let mut x = vec![T::zero(); m];
    for r in (0..m).rev() {
        let mut s = a[r][m];
        for c in r + 1..m {
            s = s - a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_preserved() {
        let y = [4.0; 5];
        for degree in 0..=2 {
            for q in [degree + 2, 5, 9] {
                let out = loess_smooth(&y, &LoessConfig::new(Span::Points(q), degree)).unwrap();
                assert!(out.iter().all(|v| (v - 4.0f64).abs() < 1e-12), "{degree} {q} {out:?}");
            }
        }
    }

    #[test]
    fn affine_is_reproduced_at_degree_one() {
        let y: Vec<f64> = (0..40).map(|t| 2.0 * t as f64 + 1.0).collect();
        for span in [Span::Points(3), Span::Fraction(0.3), Span::Points(100)] {
            let out = loess_smooth(&y, &LoessConfig::new(span, 1)).unwrap();
            for (a, b) in out.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_is_reproduced_at_degree_two() {
        let y: Vec<f64> = (0..30).map(|t| 0.5 * (t * t) as f64 - 3.0 * t as f64).collect();
        let out = loess_smooth(&y, &LoessConfig::new(Span::Points(7), 2)).unwrap();
        for (a, b) in out.iter().zip(&y) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn window_validation() {
        let y = [1.0f64; 10];
        assert!(matches!(
            loess_smooth(&y, &LoessConfig::new(Span::Points(2), 1)),
            Err(Error::WindowTooSmall { window: 2, degree: 1 })
        ));
        assert!(matches!(
            loess_smooth(&y, &LoessConfig::new(Span::Fraction(0.1), 0)),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(matches!(
            loess_smooth(&y[..2], &LoessConfig::new(Span::Points(5), 1)),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(loess_smooth(&y, &LoessConfig::new(Span::Points(5), 3)).is_err());
    }

    #[test]
    fn extrapolates_outside_range() {
        let y: Vec<f64> = (0..10).map(|t| 3.0 * t as f64 - 2.0).collect();
        let before = fit_at(&y, None, -1.0, 4, 1).unwrap();
        let after = fit_at(&y, None, 10.0, 4, 1).unwrap();
        assert!((before + 5.0).abs() < 1e-9);
        assert!((after - 28.0).abs() < 1e-9);
    }

    #[test]
    fn zero_robustness_weights_give_none() {
        let y = [1.0f64, 2.0, 3.0];
        assert!(fit_at(&y, Some(&[0.0, 0.0, 0.0]), 1.0, 3, 1).is_none());
    }

    #[test]
    fn singular_design_falls_back_to_mean() {
        // Only one point carries weight: a line through it is undetermined.
        let y = [5.0f64, 7.0, 9.0];
        let v = fit_at(&y, Some(&[0.0, 1.0, 0.0]), 1.0, 3, 1).unwrap();
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let y: Vec<f32> = (0..20).map(|t| t as f32).collect();
        let out = loess_smooth(&y, &LoessConfig::new(Span::Points(5), 1)).unwrap();
        assert!(out.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-4));
    }
}
