//! Pipeline settings: flat TOML file first, command-line flags on top.

use std::path::Path;

use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use infodelta::series::WeekStart;
use infodelta::PipelineConfig;

use crate::Failure;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeekArg {
    Monday,
    Sunday,
}

#[derive(Args, Debug, Default)]
pub struct Tuning {
    /// Significance level; the IQR multiplier is 0.15 / alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest fraction of points that may be flagged.
    #[arg(long)]
    pub max_anoms: Option<f64>,
    #[arg(long)]
    pub trend_window: Option<usize>,
    /// Seasonal period; 0 disables the seasonal component.
    #[arg(long)]
    pub period: Option<usize>,
    /// Regular points a persistence run may bridge.
    #[arg(long)]
    pub gap_tolerance: Option<usize>,
    /// Half-width of the Balance band around zero delta.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub week_start: Option<WeekArg>,
}

#[derive(Args, Debug, Default)]
pub struct Window {
    /// First date analysed (YYYY-MM-DD).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date analysed (YYYY-MM-DD).
    #[arg(long)]
    pub to: Option<NaiveDate>,
}

/// Reads the config file, if any. A missing file is an I/O failure; a file
/// with unknown keys or bad values is a validation failure.
pub fn load(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

impl Tuning {
    pub fn apply(&self, config: &mut PipelineConfig) {
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.max_anoms {
            config.max_anoms = v;
        }
        if let Some(v) = self.trend_window {
            config.trend_window = Some(v);
        }
        if let Some(v) = self.period {
            config.seasonal_period = Some(v);
        }
        if let Some(v) = self.gap_tolerance {
            config.gap_tolerance = v;
        }
        if let Some(v) = self.epsilon {
            config.balance_epsilon = v;
        }
        if let Some(w) = self.week_start {
            config.week_start = match w {
                WeekArg::Monday => WeekStart::Monday,
                WeekArg::Sunday => WeekStart::Sunday,
            };
        }
    }
}

impl Window {
    pub fn apply(&self, config: &mut PipelineConfig) {
        if self.from.is_some() {
            config.window_start = self.from;
        }
        if self.to.is_some() {
            config.window_end = self.to;
        }
    }
}
