//! Five-regime labelling and persistence of anomalous episodes.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::anomaly::AnomalyResult;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::DeltaSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Void,
    Lack,
    Balance,
    Abundance,
    Overabundance,
}

impl Regime {
    pub const ALL: [Regime; 5] =
        [Regime::Void, Regime::Lack, Regime::Balance, Regime::Abundance, Regime::Overabundance];

    pub fn macro_state(self) -> MacroState {
        match self {
            Regime::Void | Regime::Overabundance => MacroState::Anomaly,
            _ => MacroState::Regular,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Void => "void",
            Regime::Lack => "lack",
            Regime::Balance => "balance",
            Regime::Abundance => "abundance",
            Regime::Overabundance => "overabundance",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacroState {
    Anomaly,
    Regular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel<T> {
    pub date: NaiveDate,
    pub regime: Regime,
    pub macro_state: MacroState,
    pub delta: T,
}

/// Labels each timestamp. Anomalies become Void or Overabundance by the sign
/// of the delta; regular points become Lack, Balance or Abundance depending
/// on whether the delta is below `-epsilon`, within `[-epsilon, epsilon]`,
/// or above `epsilon`.
///
/// Anomalies with a zero delta must have been demoted by
/// [`crate::anomaly::sign_anomalies`] beforehand.
pub fn classify_regimes<T: Scalar>(
    delta: &DeltaSeries<T>,
    anomalies: &AnomalyResult<T>,
    balance_epsilon: T,
) -> Result<Vec<RegimeLabel<T>>> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(balance_epsilon >= T::zero()) {
        return Err(Error::InvalidConfig(format!("balance epsilon {balance_epsilon} is negative")));
    }
    if anomalies.points.len() != delta.len() {
        return Err(Error::TimestampMismatch);
    }
    if let Some(dates) = &anomalies.dates {
        if dates.len() != delta.len() || dates.iter().zip(&delta.points).any(|(a, p)| *a != p.date) {
            return Err(Error::TimestampMismatch);
        }
    }
    delta
        .points
        .iter()
        .zip(&anomalies.points)
        .map(|(p, a)| {
            let regime = if a.is_anomaly {
                if p.delta > T::zero() {
                    Regime::Overabundance
                } else if p.delta < T::zero() {
                    Regime::Void
                } else {
                    return Err(Error::UnsignedAnomaly(p.date));
                }
            } else if p.delta < -balance_epsilon {
                Regime::Lack
            } else if p.delta > balance_epsilon {
                Regime::Abundance
            } else {
                Regime::Balance
            };
            Ok(RegimeLabel { date: p.date, regime, macro_state: regime.macro_state(), delta: p.delta })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunSign {
    Positive,
    Negative,
}

impl RunSign {
    fn of(regime: Regime) -> Option<RunSign> {
        match regime {
            Regime::Overabundance => Some(RunSign::Positive),
            Regime::Void => Some(RunSign::Negative),
            _ => None,
        }
    }
}

/// A maximal same-sign anomalous episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistenceRun {
    pub sign: RunSign,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Inclusive span in resolution units (days for daily labels).
    pub length: usize,
    /// Regular points absorbed into the run.
    pub bridged_gaps: usize,
}

/// Groups anomalies into runs. Stretches of up to `gap_tolerance` regular
/// points between anomalies of the same sign are absorbed; a longer stretch
/// or any anomaly of the opposite sign ends the run.
///
/// Labels must be contiguous in time (one per resolution step).
pub fn persistence_runs<T>(labels: &[RegimeLabel<T>], gap_tolerance: usize) -> Vec<PersistenceRun> {
    struct Open {
        sign: RunSign,
        start: usize,
        last: usize,
        bridged: usize,
    }
    let close = |o: &Open| PersistenceRun {
        sign: o.sign,
        start: labels[o.start].date,
        end: labels[o.last].date,
        length: o.last - o.start + 1,
        bridged_gaps: o.bridged,
    };

    let mut runs = Vec::new();
    let mut open: Option<Open> = None;
    for (i, label) in labels.iter().enumerate() {
        let Some(sign) = RunSign::of(label.regime) else { continue };
        match open.as_mut() {
            Some(o) if o.sign == sign && i - o.last - 1 <= gap_tolerance => {
                o.bridged += i - o.last - 1;
                o.last = i;
            }
            _ => {
                if let Some(o) = open.take() {
                    runs.push(close(&o));
                }
                open = Some(Open { sign, start: i, last: i, bridged: 0 });
            }
        }
    }
    if let Some(o) = open {
        runs.push(close(&o));
    }
    runs
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignSummary {
    pub count: usize,
    pub mean_length: Option<f64>,
    pub max_length: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceSummary {
    pub positive: SignSummary,
    pub negative: SignSummary,
}

pub fn persistence_summary(runs: &[PersistenceRun]) -> PersistenceSummary {
    let summarize = |sign: RunSign| {
        let lengths: Vec<usize> = runs.iter().filter(|r| r.sign == sign).map(|r| r.length).collect();
        if lengths.is_empty() {
            return SignSummary::default();
        }
        SignSummary {
            count: lengths.len(),
            mean_length: Some(lengths.iter().sum::<usize>() as f64 / lengths.len() as f64),
            max_length: lengths.iter().max().copied(),
        }
    };
    PersistenceSummary { positive: summarize(RunSign::Positive), negative: summarize(RunSign::Negative) }
}
