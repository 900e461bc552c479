//! Reference implementations and fixtures shared by the integration tests.
//! Each oracle is written from the definition, not from the library code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use infodelta::bench::GroundTruth;
use infodelta::series::{Point, Resolution, Role, SeriesMeta, TimeSeries};

pub fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
}

pub fn daily(id: &str, role: Role, values: &[f64]) -> TimeSeries<f64> {
    let points = values.iter().enumerate().map(|(i, &v)| Point::new(day0() + Duration::days(i as i64), v)).collect();
    TimeSeries::new(SeriesMeta::new(id, role), Resolution::Daily, points).unwrap()
}

pub fn weekly(id: &str, role: Role, values: &[f64]) -> TimeSeries<f64> {
    let start = NaiveDate::from_ymd_opt(2020, 1, 5).unwrap();
    let points = values.iter().enumerate().map(|(i, &v)| Point::new(start + Duration::weeks(i as i64), v)).collect();
    TimeSeries::new(SeriesMeta::new(id, role), Resolution::Weekly, points).unwrap()
}

/// Weighted least-squares Loess at every integer position. The bandwidth is
/// the distance to the q-th nearest position (widened by `(q - n) / 2` when
/// the window exceeds the series), and the local polynomial is fitted by
/// modified Gram-Schmidt on the weighted design in coordinates `x / n`.
pub fn loess_oracle(y: &[f64], q: usize, degree: usize) -> Vec<f64> {
    let n = y.len();
    let scale = n as f64;
    (0..n)
        .map(|i| {
            let mut dist: Vec<f64> = (0..n).map(|j| (j as f64 - i as f64).abs()).collect();
            dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut h = dist[q.min(n) - 1];
            if q > n {
                h += (q - n) as f64 / 2.0;
            }
            let rows: Vec<(f64, f64, f64)> = (0..n)
                .filter_map(|j| {
                    let d = (j as f64 - i as f64).abs();
                    (d < h).then(|| {
                        let u = d / h;
                        let w = (1.0 - u * u * u).powi(3);
                        (j as f64 / scale, y[j], w.sqrt())
                    })
                })
                .collect();
            wls_eval(&rows, degree, i as f64 / scale)
        })
        .collect()
}

/// Solves min sum (sw * (y - p(x)))^2 over polynomials of `degree` and
/// evaluates p at `x0`.
fn wls_eval(rows: &[(f64, f64, f64)], degree: usize, x0: f64) -> f64 {
    let p = degree + 1;
    let mut cols: Vec<Vec<f64>> =
        (0..p).map(|k| rows.iter().map(|&(x, _, s)| s * x.powi(k as i32)).collect()).collect();
    let mut rhs: Vec<f64> = rows.iter().map(|&(_, y, s)| s * y).collect();
    let mut r = vec![vec![0.0; p]; p];
    let mut qty = vec![0.0; p];
    for k in 0..p {
        for j in 0..k {
            let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
            r[j][k] = dot;
            let (head, tail) = cols.split_at_mut(k);
            for (c, q) in tail[0].iter_mut().zip(&head[j]) {
                *c -= dot * q;
            }
        }
        let norm = cols[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[k][k] = norm;
        for c in cols[k].iter_mut() {
            *c /= norm;
        }
        let dot: f64 = cols[k].iter().zip(&rhs).map(|(a, b)| a * b).sum();
        qty[k] = dot;
        for (v, q) in rhs.iter_mut().zip(&cols[k]) {
            *v -= dot * q;
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = ((k + 1)..p).map(|j| r[k][j] * beta[j]).sum();
        beta[k] = (qty[k] - s) / r[k][k];
    }
    beta.iter().enumerate().map(|(k, b)| b * x0.powi(k as i32)).sum()
}

/// (precision, recall, f1) by explicit set counting.
pub fn metric_oracle(detected: &[NaiveDate], truth: &[NaiveDate]) -> (f64, f64, f64) {
    let mut hits = 0usize;
    for d in detected {
        if truth.iter().any(|t| t == d) {
            hits += 1;
        }
    }
    if detected.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let precision = hits as f64 / detected.len() as f64;
    let recall = if truth.is_empty() { 0.0 } else { hits as f64 / truth.len() as f64 };
    let f1 = if hits == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    (precision, recall, f1)
}

pub fn truth_from(dates: &BTreeSet<NaiveDate>) -> GroundTruth {
    GroundTruth { injected: dates.iter().map(|&d| (d, infodelta::bench::InjectionSign::Up)).collect() }
}

/// Pearson correlation as the mean product of population z-scores.
pub fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let z = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        v.iter().map(|x| (x - m) / sd).collect::<Vec<_>>()
    };
    z(a).iter().zip(z(b)).map(|(x, y)| x * y).sum::<f64>() / n
}
