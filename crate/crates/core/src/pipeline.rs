//! End-to-end analysis of one supply/demand pair.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::anomaly::{detect_anomalies, sign_anomalies, AnomalyConfig, AnomalyResult};
use crate::error::{Error, Result};
use crate::regimes::{classify_regimes, persistence_runs, RegimeLabel};
use crate::report::AnalysisReport;
use crate::series::{
    aggregate_weekly, compute_delta, normalize_weekly_0_100, rescale, DeltaSeries, Resolution, TimeSeries, WeekStart,
};
use crate::stl::{Decomposition, StlConfig};

/// Every tunable of the pipeline. Defaults: alpha 0.05, max_anoms 0.10,
/// gap tolerance 2, weekly seasonality and a 91-day trend for daily data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub max_anoms: f64,
    /// `None` picks 91 for daily data and 13 for weekly data.
    pub trend_window: Option<usize>,
    /// `None` picks 7 for daily data and 0 (no seasonality) for weekly data.
    pub seasonal_period: Option<usize>,
    pub inner_loops: usize,
    pub outer_loops: usize,
    pub gap_tolerance: usize,
    pub balance_epsilon: f64,
    pub week_start: WeekStart,
    pub window_start: Option<NaiveDate>,
    pub window_end: Option<NaiveDate>,
    /// Clamp applied to the `capped_delta` report column only.
    pub delta_cap: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.05,
            max_anoms: 0.10,
            trend_window: None,
            seasonal_period: None,
            inner_loops: 2,
            outer_loops: 0,
            gap_tolerance: 2,
            balance_epsilon: 0.5,
            week_start: WeekStart::Monday,
            window_start: None,
            window_end: None,
            delta_cap: 10.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.anomaly_config().validate()?;
        if !(self.balance_epsilon >= 0.0 && self.balance_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon {} must be >= 0", self.balance_epsilon)));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.delta_cap > 0.0) {
            return Err(Error::InvalidConfig(format!("delta cap {} must be > 0", self.delta_cap)));
        }
        if let (Some(a), Some(b)) = (self.window_start, self.window_end) {
            if a >= b {
                return Err(Error::InvalidConfig(format!("window start {a} is not before end {b}")));
            }
        }
        if self.seasonal_period == Some(1) {
            return Err(Error::InvalidPeriod(1));
        }
        Ok(())
    }

    pub fn anomaly_config(&self) -> AnomalyConfig {
        AnomalyConfig::new(self.alpha, self.max_anoms)
    }

    pub fn stl_config(&self, resolution: Resolution) -> StlConfig {
        let base = match resolution {
            Resolution::Daily => StlConfig::daily(),
            Resolution::Weekly => StlConfig::weekly(),
        };
        StlConfig {
            period: self.seasonal_period.unwrap_or(base.period),
            trend_window: self.trend_window.unwrap_or(base.trend_window),
            inner_loops: self.inner_loops,
            outer_loops: self.outer_loops,
            ..base
        }
    }
}

/// Intermediate products of the detection stage.
#[derive(Clone, Debug)]
pub struct DeltaAnalysis {
    pub decomposition: Decomposition<f64>,
    pub anomalies: AnomalyResult<f64>,
    pub labels: Vec<RegimeLabel<f64>>,
}

/// Decomposes a delta series, flags and signs anomalies and assigns regimes.
pub fn analyze_delta(delta: &DeltaSeries<f64>, config: &PipelineConfig) -> Result<DeltaAnalysis> {
    config.validate()?;
    let decomposition = config.stl_config(delta.resolution).decompose(&delta.deltas())?;
    let raw = detect_anomalies(&decomposition, &config.anomaly_config())?;
    let anomalies = sign_anomalies(raw, delta)?;
    let labels = classify_regimes(delta, &anomalies, config.balance_epsilon)?;
    Ok(DeltaAnalysis { decomposition, anomalies, labels })
}

/// How the supply series was brought onto the demand's resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Harmonization {
    None,
    /// Daily supply summed into weeks and mapped onto 0-100.
    WeeklyNormalized,
}

/// Brings supply and demand onto a common resolution.
pub fn harmonize(
    supply: &TimeSeries<f64>,
    demand: &TimeSeries<f64>,
    week_start: WeekStart,
) -> Result<(TimeSeries<f64>, Harmonization)> {
    match (supply.resolution, demand.resolution) {
        (s, d) if s == d => Ok((supply.clone(), Harmonization::None)),
        (Resolution::Daily, Resolution::Weekly) => {
            let weekly = normalize_weekly_0_100(&aggregate_weekly(supply, week_start)?)?;
            Ok((weekly, Harmonization::WeeklyNormalized))
        }
        (s, d) => Err(Error::ResolutionPairUnsupported { supply: s.as_str(), demand: d.as_str() }),
    }
}

/// Runs rescale, delta, STL, detection, signing, regime labelling and
/// persistence on one supply/demand pair.
pub fn run_analysis(
    supply: &TimeSeries<f64>,
    demand: &TimeSeries<f64>,
    config: &PipelineConfig,
) -> Result<AnalysisReport> {
    config.validate()?;
    let supply_w = supply.restrict(config.window_start, config.window_end);
    let demand_w = demand.restrict(config.window_start, config.window_end);
    let (supply_h, harmonization) = harmonize(&supply_w, &demand_w, config.week_start)?;
    let supply_r = rescale(&supply_h)?;
    let demand_r = rescale(&demand_w)?;
    let delta = compute_delta(&supply_r, &demand_r)?;
    let analysis = analyze_delta(&delta, config)?;
    let runs = persistence_runs(&analysis.labels, config.gap_tolerance);
    Ok(AnalysisReport::assemble(
        config,
        &supply_h,
        &demand_w,
        harmonization,
        supply_r.mean,
        demand_r.mean,
        &delta,
        &analysis,
        runs,
    ))
}
