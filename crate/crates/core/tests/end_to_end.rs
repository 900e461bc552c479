mod common;

use std::collections::HashMap;

use chrono::Duration;
use common::*;
use infodelta::analytics::{quality_by_anomaly_state, BucketPolicy, PostRecord};
use infodelta::io::{find_series, read_series_csv, write_series_csv};
use infodelta::report::{AnalysisReport, ReportFormat};
use infodelta::series::{Role, WeekStart};
use infodelta::*;

fn noisy(n: usize, seed: u64) -> Vec<f64> {
    // Small LCG keeps the fixture free of RNG crate details.
    let mut state = seed;
    (0..n)
        .map(|t| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            10.0 + 2.0 * ((t % 7) as f64 / 7.0) + u
        })
        .collect()
}

#[test]
fn csv_to_report_round_trip() {
    let mut supply = noisy(200, 1);
    supply[120] = 60.0;
    let demand = noisy(200, 2);
    let mut buf = Vec::new();
    write_series_csv(&[daily("fb", Role::Supply, &supply), daily("wiki", Role::Demand, &demand)], &mut buf).unwrap();
    let series = read_series_csv(buf.as_slice()).unwrap();

    let report = run_analysis(
        find_series(&series, "fb").unwrap(),
        find_series(&series, "wiki").unwrap(),
        &PipelineConfig::default(),
    )
    .unwrap();
    let spike = &report.rows[120];
    assert!(spike.is_anomaly);
    assert_eq!(spike.regime, Regime::Overabundance);
    assert_eq!(report.summary.n_positive, report.rows.iter().filter(|r| r.regime == Regime::Overabundance).count());
    assert!(report.rows.iter().all(|r| r.band_lo <= r.band_hi));

    let json = report.to_bytes(ReportFormat::Json).unwrap();
    assert_eq!(AnalysisReport::read_json(json.as_slice()).unwrap(), report);
}

#[test]
fn demand_surge_is_a_void() {
    let supply = noisy(150, 3);
    let mut demand = noisy(150, 4);
    demand[70..73].fill(80.0);
    let report = run_analysis(
        &daily("s", Role::Supply, &supply),
        &daily("d", Role::Demand, &demand),
        &PipelineConfig::default(),
    )
    .unwrap();
    for t in 70..73 {
        assert_eq!(report.rows[t].regime, Regime::Void, "day {t}");
    }
    let run = report.runs.iter().find(|r| r.start == day0() + Duration::days(70)).expect("void run");
    assert_eq!(run.length, 3);
}

#[test]
fn weekly_demand_is_harmonized() {
    let supply = daily("s", Role::Supply, &noisy(7 * 40, 5));
    let weekly_supply = aggregate_weekly(&supply, WeekStart::Sunday).unwrap();
    let demand_values: Vec<f64> = (0..weekly_supply.len()).map(|i| 40.0 + (i % 5) as f64).collect();
    let demand = infodelta::series::TimeSeries::new(
        infodelta::series::SeriesMeta::new("gt", Role::Demand),
        infodelta::series::Resolution::Weekly,
        weekly_supply
            .points()
            .iter()
            .zip(&demand_values)
            .map(|(p, &v)| infodelta::series::Point::new(p.date, v))
            .collect(),
    )
    .unwrap();
    let config = PipelineConfig { week_start: WeekStart::Sunday, ..Default::default() };
    let report = run_analysis(&supply, &demand, &config).unwrap();
    assert_eq!(report.provenance.persistence_unit, "week");
    assert!(report.rows.len() >= weekly_supply.len() - 1);
    let mean: f64 = report.rows.iter().map(|r| r.supply_rescaled).sum::<f64>() / report.rows.len() as f64;
    assert!((mean - 1.0).abs() < 0.05);
}

#[test]
fn quality_table_from_report_labels() {
    let mut supply = noisy(100, 6);
    supply[50] = 90.0;
    let report = run_analysis(
        &daily("s", Role::Supply, &supply),
        &daily("d", Role::Demand, &noisy(100, 7)),
        &PipelineConfig::default(),
    )
    .unwrap();
    let post = |day: i64, domain: &str| PostRecord {
        timestamp: day0() + Duration::days(day),
        domain: domain.into(),
        platform: "twitter".into(),
        region: "IT".into(),
        topic: "x".into(),
    };
    let posts = vec![
        post(50, "good.org"),
        post(50, "junk.net"),
        post(10, "good.org"),
        post(400, "good.org"),
        post(11, "unknown.io"),
    ];
    let ratings = HashMap::from([("good.org".to_string(), 100.0), ("junk.net".to_string(), 12.0)]);
    let table = quality_by_anomaly_state(&posts, &ratings, &report.labels(), None, BucketPolicy::Lower).unwrap();
    let rows = &table.platforms["twitter"];
    let positive = rows.iter().find(|r| r.state == infodelta::analytics::PostState::PositiveAnomaly).unwrap();
    assert_eq!(positive.n_posts, 2);
    let pct = positive.percentages.unwrap();
    assert_eq!(pct[ScoreBucket::Top.index()], 50.0);
    assert_eq!(pct[ScoreBucket::MaxCaution.index()], 50.0);
    assert_eq!(table.excluded.unlabelled, 1);
    assert_eq!(table.excluded.unrated, 1);
    assert_eq!(table.included + table.excluded.total(), table.total_posts);
}

#[test]
fn single_precision_core_agrees_with_double() {
    let y: Vec<f64> = noisy(120, 8);
    let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
    let d64 = stl_decompose(&y, 7, 91, 2, 0).unwrap();
    let d32: Decomposition32 = stl_decompose(&y32, 7, 91, 2, 0).unwrap();
    for t in 0..y.len() {
        assert!((d64.trend[t] - d32.trend[t] as f64).abs() < 1e-3);
        assert!((d64.seasonal[t] - d32.seasonal[t] as f64).abs() < 1e-3);
    }
    assert!(d32.max_recomposition_error() < 1e-4);
}

#[test]
fn loess_matches_oracle_across_degrees_and_spans() {
    for (n, q, degree) in [(10, 4, 0), (25, 25, 2), (40, 13, 1), (31, 60, 2), (50, 7, 0)] {
        let y = noisy(n, n as u64);
        let got = loess_smooth(&y, &LoessConfig::new(Span::Points(q), degree)).unwrap();
        for (a, b) in got.iter().zip(loess_oracle(&y, q, degree)) {
            assert!((a - b).abs() < 1e-9, "n={n} q={q} degree={degree}");
        }
    }
}

#[test]
fn rank_deficient_window_falls_back_to_weighted_mean() {
    // With three points only the centre has positive tricube weight.
    let y = noisy(12, 12);
    let got = loess_smooth(&y, &LoessConfig::new(Span::Points(3), 1)).unwrap();
    for t in 1..11 {
        assert_eq!(got[t], y[t]);
    }
}
