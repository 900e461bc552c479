//! Analysis report and its JSON/CSV serializations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::anomaly::AnomalySign;
use crate::error::Result;
use crate::pipeline::{DeltaAnalysis, Harmonization, PipelineConfig};
use crate::regimes::{persistence_summary, PersistenceRun, PersistenceSummary, Regime, RegimeLabel};
use crate::series::{Coverage, DeltaSeries, Resolution, SeriesMeta, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub supply: SeriesMeta,
    pub demand: SeriesMeta,
    pub resolution: Resolution,
    pub harmonization: Harmonization,
    pub coverage: Coverage,
    pub supply_mean: f64,
    pub demand_mean: f64,
    pub imputed_supply_points: usize,
    pub imputed_demand_points: usize,
    /// `"day"` or `"week"`; run lengths and gap tolerance are in this unit.
    pub persistence_unit: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub k: f64,
    pub lower: f64,
    pub upper: f64,
    pub cap: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub date: NaiveDate,
    pub supply_rescaled: f64,
    pub demand_rescaled: f64,
    pub delta: f64,
    pub capped_delta: f64,
    pub seasonal: f64,
    pub trend: f64,
    pub remainder: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub is_anomaly: bool,
    pub sign: AnomalySign,
    pub severity_rank: Option<usize>,
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_points: usize,
    pub n_anomalies: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub anomaly_share: f64,
    pub regime_counts: BTreeMap<Regime, usize>,
    pub persistence: PersistenceSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: PipelineConfig,
    pub provenance: Provenance,
    pub limits: Limits,
    pub rows: Vec<ReportRow>,
    pub runs: Vec<PersistenceRun>,
    pub summary: Summary,
}

impl AnalysisReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        config: &PipelineConfig,
        supply: &TimeSeries<f64>,
        demand: &TimeSeries<f64>,
        harmonization: Harmonization,
        supply_mean: f64,
        demand_mean: f64,
        delta: &DeltaSeries<f64>,
        analysis: &DeltaAnalysis,
        runs: Vec<PersistenceRun>,
    ) -> Self {
        let dec = &analysis.decomposition;
        let rows: Vec<ReportRow> = delta
            .points
            .iter()
            .enumerate()
            .map(|(t, p)| {
                let a = &analysis.anomalies.points[t];
                ReportRow {
                    date: p.date,
                    supply_rescaled: p.supply,
                    demand_rescaled: p.demand,
                    delta: p.delta,
                    capped_delta: p.delta.clamp(-config.delta_cap, config.delta_cap),
                    seasonal: dec.seasonal[t],
                    trend: dec.trend[t],
                    remainder: dec.remainder[t],
                    band_lo: a.recomposed_lower,
                    band_hi: a.recomposed_upper,
                    is_anomaly: a.is_anomaly,
                    sign: a.sign,
                    severity_rank: a.severity_rank,
                    regime: analysis.labels[t].regime,
                }
            })
            .collect();

        let mut regime_counts: BTreeMap<Regime, usize> = Regime::ALL.iter().map(|&r| (r, 0)).collect();
        for row in &rows {
            *regime_counts.get_mut(&row.regime).expect("all regimes present") += 1;
        }
        let n_positive = regime_counts[&Regime::Overabundance];
        let n_negative = regime_counts[&Regime::Void];
        let n_anomalies = n_positive + n_negative;
        let res = &analysis.anomalies;
        AnalysisReport {
            config: config.clone(),
            provenance: Provenance {
                supply: supply.meta.clone(),
                demand: demand.meta.clone(),
                resolution: delta.resolution,
                harmonization,
                coverage: delta.coverage,
                supply_mean,
                demand_mean,
                imputed_supply_points: supply.points().iter().filter(|p| p.imputed).count(),
                imputed_demand_points: demand.points().iter().filter(|p| p.imputed).count(),
                persistence_unit: match delta.resolution {
                    Resolution::Daily => "day".into(),
                    Resolution::Weekly => "week".into(),
                },
            },
            limits: Limits {
                q1: res.q1,
                q3: res.q3,
                iqr: res.iqr,
                k: res.k,
                lower: res.lower,
                upper: res.upper,
                cap: res.cap,
                candidates: res.candidates,
            },
            summary: Summary {
                n_points: rows.len(),
                n_anomalies,
                n_positive,
                n_negative,
                anomaly_share: n_anomalies as f64 / rows.len().max(1) as f64,
                regime_counts,
                persistence: persistence_summary(&runs),
            },
            rows,
            runs,
        }
    }

    /// Regime labels recovered from the rows.
    pub fn labels(&self) -> Vec<RegimeLabel<f64>> {
        self.rows
            .iter()
            .map(|r| RegimeLabel {
                date: r.date,
                regime: r.regime,
                macro_state: r.regime.macro_state(),
                delta: r.delta,
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    /// One row per timestamp:
    /// `date,delta,capped_delta,regime,is_anomaly,sign,band_lo,band_hi`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["date", "delta", "capped_delta", "regime", "is_anomaly", "sign", "band_lo", "band_hi"])?;
        for r in &self.rows {
            out.write_record([
                r.date.to_string(),
                r.delta.to_string(),
                r.capped_delta.to_string(),
                r.regime.as_str().to_string(),
                r.is_anomaly.to_string(),
                sign_str(r.sign).to_string(),
                r.band_lo.to_string(),
                r.band_hi.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self, format: ReportFormat) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match format {
            ReportFormat::Json => self.write_json(&mut buf)?,
            ReportFormat::Csv => self.write_csv(&mut buf)?,
        }
        Ok(buf)
    }
}

pub(crate) fn sign_str(sign: AnomalySign) -> &'static str {
    match sign {
        AnomalySign::Positive => "positive",
        AnomalySign::Negative => "negative",
        AnomalySign::None => "none",
    }
}

/// Writes `report` to `path` in the given format.
pub fn emit_report(report: &AnalysisReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Json => report.write_json(&mut w)?,
        ReportFormat::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Persistence runs as CSV: `sign,start,end,length,bridged_gaps`.
pub fn write_runs_csv<W: Write>(runs: &[PersistenceRun], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sign", "start", "end", "length", "bridged_gaps"])?;
    for r in runs {
        let sign = match r.sign {
            crate::regimes::RunSign::Positive => "positive",
            crate::regimes::RunSign::Negative => "negative",
        };
        out.write_record([
            sign.to_string(),
            r.start.to_string(),
            r.end.to_string(),
            r.length.to_string(),
            r.bridged_gaps.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::run_analysis;
    use crate::series::Role;
    use chrono::Duration;

    fn report_with_spike(spike: f64) -> AnalysisReport {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let mk = |id: &str, role, spike_at: Option<usize>| {
            let obs: Vec<_> = (0..100)
                .map(|t| {
                    let mut v = 10.0 + ((t * 13 % 7) as f64) * 0.2;
                    if Some(t) == spike_at {
                        v = spike;
                    }
                    (start + Duration::days(t as i64), v)
                })
                .collect();
            TimeSeries::from_observations(SeriesMeta::new(id, role), Resolution::Daily, &obs).unwrap()
        };
        run_analysis(&mk("s", Role::Supply, Some(40)), &mk("d", Role::Demand, None), &PipelineConfig::default())
            .unwrap()
    }

    #[test]
    fn emission_is_deterministic() {
        let r = report_with_spike(30.0);
        for f in [ReportFormat::Json, ReportFormat::Csv] {
            assert_eq!(r.to_bytes(f).unwrap(), r.to_bytes(f).unwrap());
        }
    }

    #[test]
    fn cap_only_touches_capped_column() {
        // Supply mean is ~10.8, so a 2000 spike rescales to a delta far above 10.
        let r = report_with_spike(2000.0);
        let row = &r.rows[40];
        assert!(row.delta > 10.0);
        assert_eq!(row.capped_delta, 10.0);
        let csv = String::from_utf8(r.to_bytes(ReportFormat::Csv).unwrap()).unwrap();
        let line = csv.lines().nth(41).unwrap();
        assert!(line.contains(&row.delta.to_string()));
        assert!(line.contains(",10,"));
    }

    #[test]
    fn empty_runs_serialize_as_array() {
        let r = report_with_spike(10.0);
        let mut quiet = r.clone();
        quiet.runs.clear();
        let json = String::from_utf8(quiet.to_bytes(ReportFormat::Json).unwrap()).unwrap();
        assert!(json.contains("\"runs\": []"));
        let back = AnalysisReport::read_json(json.as_bytes()).unwrap();
        assert_eq!(back, quiet);
    }

    #[test]
    fn csv_header_and_row_count() {
        let r = report_with_spike(30.0);
        let csv = String::from_utf8(r.to_bytes(ReportFormat::Csv).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "date,delta,capped_delta,regime,is_anomaly,sign,band_lo,band_hi");
        assert_eq!(lines.count(), r.rows.len());
    }
}
