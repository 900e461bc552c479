//! Time-series representation, mean rescaling, daily-to-weekly harmonization
//! and construction of the information delta.

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Supply,
    Demand,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supply" => Some(Role::Supply),
            "demand" => Some(Role::Demand),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Supply => "supply",
            Role::Demand => "demand",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Daily,
    Weekly,
}

impl Resolution {
    pub fn step_days(self) -> i64 {
        match self {
            Resolution::Daily => 1,
            Resolution::Weekly => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Daily => "daily",
            Resolution::Weekly => "weekly",
        }
    }
}

/// First weekday of an aggregation week.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeekStart {
    /// ISO-8601 weeks.
    #[default]
    Monday,
    /// Weeks as reported by Google Trends.
    Sunday,
}

impl WeekStart {
    /// The first day of the week containing `date`.
    pub fn week_of(self, date: NaiveDate) -> NaiveDate {
        let offset = match self {
            WeekStart::Monday => date.weekday().num_days_from_monday(),
            WeekStart::Sunday => date.weekday().num_days_from_sunday(),
        };
        date - Duration::days(i64::from(offset))
    }
}

/// Identity and provenance of one stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub id: String,
    pub role: Role,
    pub source: String,
    pub region: String,
    pub topic: String,
}

impl SeriesMeta {
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        SeriesMeta { id: id.into(), role, source: String::new(), region: String::new(), topic: String::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub date: NaiveDate,
    pub value: T,
    /// Filled by interpolation rather than observed.
    #[serde(default)]
    pub imputed: bool,
    /// Weekly aggregate covering fewer than seven observed days.
    #[serde(default)]
    pub partial: bool,
}

impl<T> Point<T> {
    pub fn new(date: NaiveDate, value: T) -> Self {
        Point { date, value, imputed: false, partial: false }
    }
}

/// A contiguous, non-negative series at daily or weekly resolution.
///
/// Consecutive points are always exactly one resolution step apart; gaps in
/// the raw observations are filled at construction time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub meta: SeriesMeta,
    pub resolution: Resolution,
    points: Vec<Point<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Builds a series from points that are already contiguous.
    pub fn new(meta: SeriesMeta, resolution: Resolution, points: Vec<Point<T>>) -> Result<Self> {
        let step = resolution.step_days();
        for pair in points.windows(2) {
            if (pair[1].date - pair[0].date).num_days() != step {
                return Err(Error::InvalidSeries(format!(
                    "{}: points {} and {} are not one {} step apart",
                    meta.id,
                    pair[0].date,
                    pair[1].date,
                    resolution.as_str()
                )));
            }
        }
        for p in &points {
            check_value(&meta.id, p.date, p.value)?;
        }
        Ok(TimeSeries { meta, resolution, points })
    }

    /// Builds a series from strictly increasing observations, filling
    /// interior gaps by linear interpolation and marking those points
    /// `imputed`. Nothing is extrapolated beyond the first or last
    /// observation.
    pub fn from_observations(
        meta: SeriesMeta,
        resolution: Resolution,
        observations: &[(NaiveDate, T)],
    ) -> Result<Self> {
        let step = resolution.step_days();
        let mut points: Vec<Point<T>> = Vec::with_capacity(observations.len());
        for &(date, value) in observations {
            check_value(&meta.id, date, value)?;
            if let Some(prev) = points.last().copied() {
                let gap = (date - prev.date).num_days();
                if gap <= 0 {
                    return Err(Error::InvalidSeries(format!("{}: dates not strictly increasing at {date}", meta.id)));
                }
                if gap % step != 0 {
                    return Err(Error::InvalidSeries(format!(
                        "{}: {date} is not aligned to the {} grid",
                        meta.id,
                        resolution.as_str()
                    )));
                }
                let steps = gap / step;
                let total = T::from_i64(steps).expect("step count fits scalar");
                for k in 1..steps {
                    let frac = T::from_i64(k).expect("step count fits scalar") / total;
                    points.push(Point {
                        date: prev.date + Duration::days(k * step),
                        value: prev.value + (value - prev.value) * frac,
                        imputed: true,
                        partial: false,
                    });
                }
            }
            points.push(Point::new(date, value));
        }
        Ok(TimeSeries { meta, resolution, points })
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn values(&self) -> Vec<T> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps only points inside the inclusive `[from, to]` window.
    pub fn restrict(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        let points = self
            .points
            .iter()
            .filter(|p| from.is_none_or(|f| p.date >= f) && to.is_none_or(|t| p.date <= t))
            .copied()
            .collect();
        TimeSeries { meta: self.meta.clone(), resolution: self.resolution, points }
    }

    /// Multiplies every value by `factor` (which must be non-negative).
    pub fn scaled(&self, factor: T) -> Self {
        let points = self.points.iter().map(|p| Point { value: p.value * factor, ..*p }).collect();
        TimeSeries { meta: self.meta.clone(), resolution: self.resolution, points }
    }
}

fn check_value<T: Scalar>(id: &str, date: NaiveDate, value: T) -> Result<()> {
    if !value.is_finite() || value < T::zero() {
        return Err(Error::InvalidSeries(format!("{id}: value {value} at {date} is not a finite non-negative number")));
    }
    Ok(())
}

/// A series divided by its mean over the full observation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSeries<T> {
    pub base: SeriesMeta,
    pub resolution: Resolution,
    /// The divisor, i.e. the arithmetic mean of the original values.
    pub mean: T,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<T>,
}

/// Divides every value by the series mean, so the result averages to one.
pub fn rescale<T: Scalar>(series: &TimeSeries<T>) -> Result<RescaledSeries<T>> {
    if series.len() < 2 {
        return Err(Error::EmptySeries(series.len()));
    }
    let values = series.values();
    let m = mean(&values).expect("non-empty");
    if m <= T::zero() {
        return Err(Error::ZeroMeanSeries);
    }
    Ok(RescaledSeries {
        base: series.meta.clone(),
        resolution: series.resolution,
        mean: m,
        dates: series.dates(),
        values: values.into_iter().map(|v| v / m).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint<T> {
    pub date: NaiveDate,
    pub delta: T,
    pub supply: T,
    pub demand: T,
}

/// How many timestamps of each parent survived the intersection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub common: usize,
    pub supply_dropped: usize,
    pub demand_dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSeries<T> {
    pub supply_id: String,
    pub demand_id: String,
    pub resolution: Resolution,
    pub points: Vec<DeltaPoint<T>>,
    pub coverage: Coverage,
}

impl<T: Scalar> DeltaSeries<T> {
    pub fn deltas(&self) -> Vec<T> {
        self.points.iter().map(|p| p.delta).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rescaled supply minus rescaled demand on every shared timestamp.
pub fn compute_delta<T: Scalar>(supply: &RescaledSeries<T>, demand: &RescaledSeries<T>) -> Result<DeltaSeries<T>> {
    if supply.resolution != demand.resolution {
        return Err(Error::ResolutionMismatch {
            supply: supply.resolution.as_str(),
            demand: demand.resolution.as_str(),
        });
    }
    let (mut i, mut j) = (0, 0);
    let mut points = Vec::new();
    while i < supply.dates.len() && j < demand.dates.len() {
        match supply.dates[i].cmp(&demand.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let (s, d) = (supply.values[i], demand.values[j]);
                points.push(DeltaPoint { date: supply.dates[i], delta: s - d, supply: s, demand: d });
                i += 1;
                j += 1;
            }
        }
    }
    if points.len() < 2 {
        return Err(Error::NoOverlap(points.len()));
    }
    let common = points.len();
    Ok(DeltaSeries {
        supply_id: supply.base.id.clone(),
        demand_id: demand.base.id.clone(),
        resolution: supply.resolution,
        points,
        coverage: Coverage {
            common,
            supply_dropped: supply.dates.len() - common,
            demand_dropped: demand.dates.len() - common,
        },
    })
}

/// Sums a daily series into weeks. Each weekly point is dated by the first
/// day of its week; weeks with fewer than seven days are marked `partial`.
pub fn aggregate_weekly<T: Scalar>(series: &TimeSeries<T>, week_start: WeekStart) -> Result<TimeSeries<T>> {
    if series.resolution == Resolution::Weekly {
        return Err(Error::AlreadyWeekly);
    }
    let mut weeks: Vec<(Point<T>, usize)> = Vec::new();
    for p in series.points() {
        let week = week_start.week_of(p.date);
        match weeks.last_mut() {
            Some((w, days)) if w.date == week => {
                w.value = w.value + p.value;
                w.imputed |= p.imputed;
                *days += 1;
            }
            _ => weeks.push((Point { date: week, value: p.value, imputed: p.imputed, partial: false }, 1)),
        }
    }
    let points = weeks.into_iter().map(|(p, days)| Point { partial: days < 7, ..p }).collect();
    TimeSeries::new(series.meta.clone(), Resolution::Weekly, points)
}

/// Maps a weekly series onto the 0-100 integer scale where the busiest week
/// is 100: `floor(value * 100 / max)`.
pub fn normalize_weekly_0_100<T: Scalar>(series: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    if series.resolution != Resolution::Weekly {
        return Err(Error::WrongResolution {
            expected: Resolution::Weekly.as_str(),
            found: series.resolution.as_str(),
        });
    }
    let max = series.points().iter().map(|p| p.value).fold(T::zero(), T::max);
    if max <= T::zero() {
        return Err(Error::ZeroMaxSeries);
    }
    let hundred = T::lit(100.0);
    let points = series
        .points()
        .iter()
        .map(|p| {
            // Ratios within rounding noise of an integer are snapped first, so
            // the maximum always maps to 100 and 30% of it to 30, not 29.
            let r = p.value * hundred / max;
            let nearest = r.round();
            let value = if (r - nearest).abs() < T::lit(1e-9) { nearest } else { r.floor() };
            Point { value, ..*p }
        })
        .collect();
    TimeSeries::new(series.meta.clone(), Resolution::Weekly, points)
}
