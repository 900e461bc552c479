//! Synthetic supply/demand benchmark with injected anomalies.
//!
//! Both streams are i.i.d. Gaussian draws clipped at zero. A fixed number of
//! timestamps are pushed up or down by a multiple of the base standard
//! deviation, the full pipeline runs on the pair, and flagged timestamps are
//! scored against the injected ones.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{analyze_delta, PipelineConfig};
use crate::series::{compute_delta, rescale, Point, Resolution, Role, SeriesMeta, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionTarget {
    Supply,
    Demand,
    /// Each injected timestamp goes to supply or demand by a fair coin.
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub series_length: usize,
    pub base_mean: f64,
    pub base_std: f64,
    pub injection_count: usize,
    /// Injection magnitudes in units of `base_std`.
    pub magnitudes: Vec<f64>,
    pub repetitions: usize,
    pub injection_target: InjectionTarget,
    pub rng_seed: u64,
    /// Days of slack when matching detections to injections; 0 is exact.
    pub match_tolerance_days: u32,
    pub start_date: NaiveDate,
    pub pipeline: PipelineConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            series_length: 486,
            base_mean: 10.0,
            base_std: 1.0,
            injection_count: 20,
            magnitudes: default_magnitudes(),
            repetitions: 10,
            injection_target: InjectionTarget::Supply,
            rng_seed: 20_200_101,
            match_tolerance_days: 0,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// 1.0, 1.5, ..., 15.0
pub fn default_magnitudes() -> Vec<f64> {
    (0..29).map(|i| 1.0 + 0.5 * i as f64).collect()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.injection_count > self.series_length {
            return Err(Error::CountExceedsLength { count: self.injection_count, len: self.series_length });
        }
        if self.magnitudes.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidConfig("magnitudes must be positive".into()));
        }
        if !(self.base_std >= 0.0 && self.base_std.is_finite() && self.base_mean.is_finite()) {
            return Err(Error::InvalidConfig("base mean/std must be finite, std >= 0".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        self.pipeline.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionSign {
    Up,
    Down,
}

/// Injected timestamps with the direction of each perturbation as seen in
/// the delta (a rise in demand counts as `Down`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub injected: BTreeMap<NaiveDate, InjectionSign>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.injected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.injected.is_empty()
    }

    pub fn dates(&self) -> BTreeSet<NaiveDate> {
        self.injected.keys().copied().collect()
    }
}

fn synthetic(id: &str, role: Role, start: NaiveDate, values: Vec<f64>) -> TimeSeries<f64> {
    let points = values.into_iter().enumerate().map(|(i, v)| Point::new(start + Duration::days(i as i64), v)).collect();
    TimeSeries::new(SeriesMeta::new(id, role), Resolution::Daily, points).expect("contiguous non-negative draws")
}

/// Two independent series of `Normal(base_mean, base_std^2)` draws, negative
/// draws clipped to zero.
pub fn generate_base_pair(config: &SynthConfig, seed: u64) -> (TimeSeries<f64>, TimeSeries<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(config.base_mean, config.base_std).expect("validated std");
    let mut draw = || -> Vec<f64> { (0..config.series_length).map(|_| normal.sample(&mut rng).max(0.0)).collect() };
    let supply = draw();
    let demand = draw();
    (
        synthetic("synthetic_supply", Role::Supply, config.start_date, supply),
        synthetic("synthetic_demand", Role::Demand, config.start_date, demand),
    )
}

/// Perturbs `count` distinct, uniformly chosen timestamps by
/// `+/- magnitude * base_std` (fair-coin sign), clipping at zero.
pub fn inject_anomalies(
    series: &TimeSeries<f64>,
    magnitude: f64,
    base_std: f64,
    count: usize,
    seed: u64,
) -> Result<(TimeSeries<f64>, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = pick(series.len(), count, &mut rng)?;
    let mut values = series.values();
    let mut truth = GroundTruth::default();
    for i in picks {
        let up = rng.gen_bool(0.5);
        let shift = magnitude * base_std;
        values[i] = (values[i] + if up { shift } else { -shift }).max(0.0);
        let sign = if up { InjectionSign::Up } else { InjectionSign::Down };
        truth.injected.insert(series.points()[i].date, sign);
    }
    Ok((rebuild(series, values), truth))
}

fn pick(len: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if count > len {
        return Err(Error::CountExceedsLength { count, len });
    }
    let mut picks = sample(rng, len, count).into_vec();
    picks.sort_unstable();
    Ok(picks)
}

fn rebuild(series: &TimeSeries<f64>, values: Vec<f64>) -> TimeSeries<f64> {
    let points = series.points().iter().zip(values).map(|(p, value)| Point { value, ..*p }).collect();
    TimeSeries::new(series.meta.clone(), series.resolution, points).expect("same grid, clipped values")
}

/// Injects into supply, demand or both according to `target`.
pub fn inject_pair(
    supply: &TimeSeries<f64>,
    demand: &TimeSeries<f64>,
    target: InjectionTarget,
    magnitude: f64,
    base_std: f64,
    count: usize,
    seed: u64,
) -> Result<(TimeSeries<f64>, TimeSeries<f64>, GroundTruth)> {
    match target {
        InjectionTarget::Supply => {
            let (s, truth) = inject_anomalies(supply, magnitude, base_std, count, seed)?;
            Ok((s, demand.clone(), truth))
        }
        InjectionTarget::Demand => {
            let (d, mut truth) = inject_anomalies(demand, magnitude, base_std, count, seed)?;
            for sign in truth.injected.values_mut() {
                *sign = match sign {
                    InjectionSign::Up => InjectionSign::Down,
                    InjectionSign::Down => InjectionSign::Up,
                };
            }
            Ok((supply.clone(), d, truth))
        }
        InjectionTarget::Both => {
            if supply.len() != demand.len() {
                return Err(Error::LengthMismatch(supply.len(), demand.len()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let picks = pick(supply.len(), count, &mut rng)?;
            let (mut sv, mut dv) = (supply.values(), demand.values());
            let mut truth = GroundTruth::default();
            let shift = magnitude * base_std;
            for i in picks {
                let to_supply = rng.gen_bool(0.5);
                let up = rng.gen_bool(0.5);
                let v = if to_supply { &mut sv[i] } else { &mut dv[i] };
                *v = (*v + if up { shift } else { -shift }).max(0.0);
                let raises_delta = up == to_supply;
                let sign = if raises_delta { InjectionSign::Up } else { InjectionSign::Down };
                truth.injected.insert(supply.points()[i].date, sign);
            }
            Ok((rebuild(supply, sv), rebuild(demand, dv), truth))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_detected: usize,
    pub n_intersection: usize,
    pub n_ground_truth: usize,
}

/// Precision, recall and F1 of `detected` against exact timestamps.
/// Empty detections score zero precision.
pub fn score_detection(detected: &BTreeSet<NaiveDate>, truth: &GroundTruth) -> DetectionScore {
    score_detection_with_tolerance(detected, truth, 0)
}

/// Like [`score_detection`], but a detection within `tolerance_days` of an
/// injection counts as a hit. Each injection matches at most one detection
/// (greedy, earliest first).
pub fn score_detection_with_tolerance(
    detected: &BTreeSet<NaiveDate>,
    truth: &GroundTruth,
    tolerance_days: u32,
) -> DetectionScore {
    let n_intersection = if tolerance_days == 0 {
        detected.iter().filter(|d| truth.injected.contains_key(d)).count()
    } else {
        let tol = Duration::days(i64::from(tolerance_days));
        let mut free: BTreeSet<NaiveDate> = truth.dates();
        let mut hits = 0;
        for &d in detected {
            if let Some(&t) = free.range(d - tol..=d + tol).next() {
                free.remove(&t);
                hits += 1;
            }
        }
        hits
    };
    metrics(detected.len(), n_intersection, truth.len())
}

fn metrics(n_detected: usize, n_intersection: usize, n_ground_truth: usize) -> DetectionScore {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(n_intersection, n_detected);
    let recall = ratio(n_intersection, n_ground_truth);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    DetectionScore { precision, recall, f1, n_detected, n_intersection, n_ground_truth }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDetail {
    pub repetition: usize,
    pub seed: u64,
    pub score: DetectionScore,
    /// Points outside the IQR limits before the anomaly cap.
    pub candidates: usize,
    pub cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub sigma: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub mean_detected: f64,
    /// Runs in which the anomaly cap discarded candidates.
    pub cap_binding_runs: usize,
    pub n_runs: usize,
    pub runs: Vec<RunDetail>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: SynthConfig,
    pub rows: Vec<BenchmarkRow>,
}

/// Derives an independent seed for one (magnitude, repetition, stage) cell.
pub fn child_seed(seed: u64, magnitude_index: usize, repetition: usize, stage: u64) -> u64 {
    let mut z = seed
        ^ (magnitude_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (repetition as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ stage.wrapping_mul(0x1656_67B1_9E37_79F9);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One benchmark cell: generate, inject, rescale, delta, detect, score.
pub fn run_once(config: &SynthConfig, magnitude: f64, magnitude_index: usize, repetition: usize) -> Result<RunDetail> {
    let base_seed = child_seed(config.rng_seed, magnitude_index, repetition, 0);
    let (supply, demand) = generate_base_pair(config, base_seed);
    let inject_seed = child_seed(config.rng_seed, magnitude_index, repetition, 1);
    let (supply, demand, truth) = inject_pair(
        &supply,
        &demand,
        config.injection_target,
        magnitude,
        config.base_std,
        config.injection_count,
        inject_seed,
    )?;
    let delta = compute_delta(&rescale(&supply)?, &rescale(&demand)?)?;
    let analysis = analyze_delta(&delta, &config.pipeline)?;
    let detected: BTreeSet<NaiveDate> =
        analysis.anomalies.anomaly_indices().into_iter().map(|i| delta.points[i].date).collect();
    Ok(RunDetail {
        repetition,
        seed: base_seed,
        score: score_detection_with_tolerance(&detected, &truth, config.match_tolerance_days),
        candidates: analysis.anomalies.candidates,
        cap: analysis.anomalies.cap,
    })
}

/// Runs every (magnitude, repetition) cell in parallel. Results do not
/// depend on scheduling since each cell derives its own seeds.
pub fn run_benchmark(config: &SynthConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..config.magnitudes.len()).flat_map(|m| (0..config.repetitions).map(move |r| (m, r))).collect();
    let details: Vec<RunDetail> =
        cells.par_iter().map(|&(m, r)| run_once(config, config.magnitudes[m], m, r)).collect::<Result<_>>()?;

    let rows = config
        .magnitudes
        .iter()
        .enumerate()
        .map(|(m, &sigma)| {
            let runs: Vec<RunDetail> = details[m * config.repetitions..(m + 1) * config.repetitions].to_vec();
            let n = runs.len() as f64;
            let mean = |f: fn(&RunDetail) -> f64| runs.iter().map(f).sum::<f64>() / n;
            BenchmarkRow {
                sigma,
                mean_precision: mean(|r| r.score.precision),
                mean_recall: mean(|r| r.score.recall),
                mean_f1: mean(|r| r.score.f1),
                mean_detected: mean(|r| r.score.n_detected as f64),
                cap_binding_runs: runs.iter().filter(|r| r.candidates > r.cap).count(),
                n_runs: runs.len(),
                runs,
            }
        })
        .collect();
    Ok(BenchmarkReport { config: config.clone(), rows })
}

impl BenchmarkReport {
    /// `sigma,mean_precision,mean_f1,n_runs`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sigma", "mean_precision", "mean_f1", "n_runs"])?;
        for r in &self.rows {
            out.write_record([
                r.sigma.to_string(),
                format!("{:.3}", r.mean_precision),
                format!("{:.3}", r.mean_f1),
                r.n_runs.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn row(&self, sigma: f64) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| (r.sigma - sigma).abs() < 1e-9)
    }
}
