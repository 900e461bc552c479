//! Demand/supply cross-correlation and the credibility mix of posts by
//! anomaly state.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimes::{Regime, RegimeLabel};
use crate::scalar::Scalar;

/// Pearson correlation of two aligned sequences (cross-correlation at lag 0).
pub fn cross_correlation_lag0<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::SeriesTooShort { len: a.len(), min: 2 });
    }
    let n = T::from_usize_lossy(a.len());
    let mean_a = a.iter().copied().sum::<T>() / n;
    let mean_b = b.iter().copied().sum::<T>() / n;
    let (mut cov, mut var_a, mut var_b) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov = cov + dx * dy;
        var_a = var_a + dx * dx;
        var_b = var_b + dy * dy;
    }
    if var_a <= T::zero() || var_b <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    let r = cov / (var_a.sqrt() * var_b.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreBucket {
    /// 100
    Top,
    /// 75 to 99
    High,
    /// 60 to 74
    Moderate,
    /// 40 to 59
    Caution,
    /// 39 and below
    MaxCaution,
}

impl ScoreBucket {
    pub const ALL: [ScoreBucket; 5] =
        [ScoreBucket::Top, ScoreBucket::High, ScoreBucket::Moderate, ScoreBucket::Caution, ScoreBucket::MaxCaution];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreBucket::Top => "S=100",
            ScoreBucket::High => "75<=S<=99",
            ScoreBucket::Moderate => "60<=S<=74",
            ScoreBucket::Caution => "40<=S<=59",
            ScoreBucket::MaxCaution => "S<=39",
        }
    }
}

/// Placement of scores that fall between two integer bucket ranges, e.g.
/// 39.5.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BucketPolicy {
    /// Into the lower bucket.
    #[default]
    Lower,
    /// Round to the nearest integer first (halves round up).
    Nearest,
}

pub fn bucket_score(score: f64) -> Result<ScoreBucket> {
    bucket_score_with(score, BucketPolicy::Lower)
}

pub fn bucket_score_with(score: f64, policy: BucketPolicy) -> Result<ScoreBucket> {
    if !(0.0..=100.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    let s = match policy {
        BucketPolicy::Lower => score,
        BucketPolicy::Nearest => score.round(),
    };
    Ok(if s >= 100.0 {
        ScoreBucket::Top
    } else if s >= 75.0 {
        ScoreBucket::High
    } else if s >= 60.0 {
        ScoreBucket::Moderate
    } else if s >= 40.0 {
        ScoreBucket::Caution
    } else {
        ScoreBucket::MaxCaution
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibilityRating {
    pub domain: String,
    pub score: f64,
}

impl CredibilityRating {
    pub fn new(domain: &str, score: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::ScoreOutOfRange(score));
        }
        Ok(CredibilityRating { domain: normalize_domain(domain), score })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub timestamp: NaiveDate,
    pub domain: String,
    pub platform: String,
    pub region: String,
    pub topic: String,
}

/// Lowercases and strips scheme, credentials, port, path, query and a
/// trailing dot: `HTTPS://News.Example.com:443/a?b` -> `news.example.com`.
pub fn normalize_domain(raw: &str) -> String {
    let mut s = raw.trim().to_ascii_lowercase();
    if let Some(i) = s.find("://") {
        s.drain(..i + 3);
    }
    if let Some(i) = s.find(['/', '?', '#']) {
        s.truncate(i);
    }
    if let Some(i) = s.rfind('@') {
        s.drain(..=i);
    }
    if let Some(i) = s.find(':') {
        s.truncate(i);
    }
    while s.ends_with('.') {
        s.pop();
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostState {
    NonAnomaly,
    NegativeAnomaly,
    PositiveAnomaly,
}

impl PostState {
    pub const ALL: [PostState; 3] = [PostState::NonAnomaly, PostState::NegativeAnomaly, PostState::PositiveAnomaly];

    fn of(regime: Regime) -> PostState {
        match regime {
            Regime::Void => PostState::NegativeAnomaly,
            Regime::Overabundance => PostState::PositiveAnomaly,
            _ => PostState::NonAnomaly,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PostState::NonAnomaly => "non_anomaly",
            PostState::NegativeAnomaly => "negative_anomaly",
            PostState::PositiveAnomaly => "positive_anomaly",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub state: PostState,
    pub n_posts: usize,
    /// Share of posts per bucket in percent, ordered as [`ScoreBucket::ALL`];
    /// absent when the row has no posts.
    pub percentages: Option<[f64; 5]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusions {
    pub before_window: usize,
    pub unlabelled: usize,
    pub unrated: usize,
}

impl Exclusions {
    pub fn total(&self) -> usize {
        self.before_window + self.unlabelled + self.unrated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityTable {
    /// Three rows (non-anomaly, negative, positive) per platform.
    pub platforms: BTreeMap<String, Vec<StateRow>>,
    pub total_posts: usize,
    pub included: usize,
    pub excluded: Exclusions,
}

/// Distribution of posts over credibility buckets for each anomaly state,
/// per platform. Posts dated before `window_start`, on days without a
/// regime label, or from unrated domains are excluded and tallied.
pub fn quality_by_anomaly_state<T: Scalar>(
    posts: &[PostRecord],
    ratings: &HashMap<String, f64>,
    labels: &[RegimeLabel<T>],
    window_start: Option<NaiveDate>,
    policy: BucketPolicy,
) -> Result<QualityTable> {
    let ratings: HashMap<String, f64> = ratings.iter().map(|(d, &s)| (normalize_domain(d), s)).collect();
    let states: HashMap<NaiveDate, PostState> = labels.iter().map(|l| (l.date, PostState::of(l.regime))).collect();

    let mut counts: BTreeMap<String, [[usize; 5]; 3]> = BTreeMap::new();
    let mut excluded = Exclusions::default();
    let mut included = 0;
    for post in posts {
        if window_start.is_some_and(|w| post.timestamp < w) {
            excluded.before_window += 1;
            continue;
        }
        let Some(&state) = states.get(&post.timestamp) else {
            excluded.unlabelled += 1;
            continue;
        };
        let Some(&score) = ratings.get(&normalize_domain(&post.domain)) else {
            excluded.unrated += 1;
            continue;
        };
        let bucket = bucket_score_with(score, policy)?;
        let row = counts.entry(post.platform.clone()).or_insert([[0; 5]; 3]);
        row[state as usize][bucket.index()] += 1;
        included += 1;
    }
    if included == 0 {
        return Err(Error::EmptyJoin);
    }

    let platforms = counts
        .into_iter()
        .map(|(platform, rows)| {
            let rows = PostState::ALL
                .iter()
                .map(|&state| {
                    let c = rows[state as usize];
                    let n: usize = c.iter().sum();
                    let percentages = (n > 0).then(|| c.map(|k| 100.0 * k as f64 / n as f64));
                    StateRow { state, n_posts: n, percentages }
                })
                .collect();
            (platform, rows)
        })
        .collect();
    Ok(QualityTable { platforms, total_posts: posts.len(), included, excluded })
}
