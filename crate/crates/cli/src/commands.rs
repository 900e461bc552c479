use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use infodelta::analytics::{quality_by_anomaly_state, BucketPolicy, QualityTable, ScoreBucket};
use infodelta::bench::{run_benchmark, InjectionTarget, SynthConfig};
use infodelta::io::{find_series, ingest_csv, read_posts_csv, read_ratings_csv};
use infodelta::regimes::{persistence_runs, persistence_summary};
use infodelta::report::{write_runs_csv, AnalysisReport, ReportFormat};
use infodelta::series::{Role, TimeSeries};
use infodelta::{run_analysis, PipelineConfig};

use crate::{config, Cli, Command, Failure, Format, Policy, Target};

pub fn run(cli: Cli) -> Result<(), Failure> {
    let mut settings = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Analyze { input, pairs, out_dir, format, tuning, window } => {
            tuning.apply(&mut settings);
            window.apply(&mut settings);
            analyze(&input, &pairs, out_dir.as_deref(), format, &settings)
        }
        Command::Benchmark {
            seed,
            repetitions,
            series_length,
            injections,
            target,
            tolerance_days,
            out,
            format,
            tuning,
        } => {
            tuning.apply(&mut settings);
            let mut bench = SynthConfig { pipeline: settings, ..Default::default() };
            if let Some(v) = seed {
                bench.rng_seed = v;
            }
            if let Some(v) = repetitions {
                bench.repetitions = v;
            }
            if let Some(v) = series_length {
                bench.series_length = v;
            }
            if let Some(v) = injections {
                bench.injection_count = v;
            }
            if let Some(t) = target {
                bench.injection_target = match t {
                    Target::Supply => InjectionTarget::Supply,
                    Target::Demand => InjectionTarget::Demand,
                    Target::Both => InjectionTarget::Both,
                };
            }
            if let Some(v) = tolerance_days {
                bench.match_tolerance_days = v;
            }
            let report = run_benchmark(&bench)?;
            let mut buf = Vec::new();
            match format {
                Format::Csv => report.write_csv(&mut buf)?,
                Format::Json => report.write_json(&mut buf)?,
            }
            emit(out.as_deref(), &buf)
        }
        Command::Decompose { input, series, out, tuning, window } => {
            tuning.apply(&mut settings);
            window.apply(&mut settings);
            decompose(&input, &series, out.as_deref(), &settings)
        }
        Command::Persistence { report, gap_tolerance, out, format } => {
            let report = read_report(&report)?;
            let gap = gap_tolerance.unwrap_or(report.config.gap_tolerance);
            let runs = persistence_runs(&report.labels(), gap);
            let mut buf = Vec::new();
            match format {
                Format::Csv => write_runs_csv(&runs, &mut buf)?,
                Format::Json => {
                    let doc = serde_json::json!({ "gap_tolerance": gap, "runs": runs, "summary": persistence_summary(&runs) });
                    serde_json::to_writer_pretty(&mut buf, &doc).map_err(infodelta::Error::from)?;
                    buf.push(b'\n');
                }
            }
            emit(out.as_deref(), &buf)
        }
        Command::Credibility { report, ratings, posts, from, policy, out, format } => {
            let report = read_report(&report)?;
            let ratings = read_ratings_csv(open(&ratings)?)?;
            let posts = read_posts_csv(open(&posts)?)?;
            let policy = match policy {
                Policy::Lower => BucketPolicy::Lower,
                Policy::Nearest => BucketPolicy::Nearest,
            };
            let start = from.or(report.config.window_start);
            let table = quality_by_anomaly_state(&posts, &ratings, &report.labels(), start, policy)?;
            let mut buf = Vec::new();
            match format {
                Format::Csv => write_quality_csv(&table, &mut buf)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut buf, &table).map_err(infodelta::Error::from)?;
                    buf.push(b'\n');
                }
            }
            emit(out.as_deref(), &buf)
        }
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_report(path: &Path) -> Result<AnalysisReport, Failure> {
    AnalysisReport::read_json(std::io::BufReader::new(open(path)?)).map_err(Failure::from)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let result = match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(bytes).map_err(|e| e.to_string()),
    };
    result.map_err(Failure::Io)
}

type Pair<'a> = (&'a TimeSeries<f64>, &'a TimeSeries<f64>);

fn resolve_pairs<'a>(series: &'a [TimeSeries<f64>], pairs: &[String]) -> Result<Vec<Pair<'a>>, Failure> {
    if pairs.is_empty() {
        let matched: Vec<_> = series
            .iter()
            .filter(|s| s.meta.role == Role::Supply)
            .flat_map(|s| {
                series
                    .iter()
                    .filter(move |d| {
                        d.meta.role == Role::Demand && d.meta.region == s.meta.region && d.meta.topic == s.meta.topic
                    })
                    .map(move |d| (s, d))
            })
            .collect();
        if matched.is_empty() {
            return Err(Failure::Invalid("no supply/demand series share a region and topic; pass --pair".into()));
        }
        return Ok(matched);
    }
    pairs
        .iter()
        .map(|p| {
            let (s, d) =
                p.split_once(':').ok_or_else(|| Failure::Invalid(format!("pair {p:?} is not SUPPLY:DEMAND")))?;
            let (s, d) = (find_series(series, s)?, find_series(series, d)?);
            if s.meta.role != Role::Supply || d.meta.role != Role::Demand {
                return Err(Failure::Invalid(format!("pair {p:?} must name a supply then a demand series")));
            }
            Ok((s, d))
        })
        .collect()
}

fn analyze(
    input: &Path,
    pairs: &[String],
    out_dir: Option<&Path>,
    format: Format,
    config: &PipelineConfig,
) -> Result<(), Failure> {
    config.validate()?;
    let series = ingest_csv(input)?;
    let pairs = resolve_pairs(&series, pairs)?;
    if pairs.len() > 1 && out_dir.is_none() {
        return Err(Failure::Invalid(format!("{} pairs selected; pass --out-dir", pairs.len())));
    }
    let format = match format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    let ext = match format {
        ReportFormat::Json => "json",
        ReportFormat::Csv => "csv",
    };
    // Pairs are independent; each writes its own file.
    let written: Vec<Result<Option<PathBuf>, Failure>> = pairs
        .par_iter()
        .map(|(s, d)| {
            let report = run_analysis(s, d, config).map_err(|e| annotate(e.into(), &s.meta.id, &d.meta.id))?;
            let bytes = report.to_bytes(format)?;
            match out_dir {
                Some(dir) => {
                    let path = dir.join(format!("{}__{}.{ext}", s.meta.id, d.meta.id));
                    std::fs::write(&path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                    eprintln!(
                        "{} vs {}: {} points, {} anomalies -> {}",
                        s.meta.id,
                        d.meta.id,
                        report.summary.n_points,
                        report.summary.n_anomalies,
                        path.display()
                    );
                    Ok(Some(path))
                }
                None => emit(None, &bytes).map(|_| None),
            }
        })
        .collect();
    written.into_iter().try_for_each(|r| r.map(|_| ()))
}

fn annotate(f: Failure, supply: &str, demand: &str) -> Failure {
    match f {
        Failure::Invalid(m) => Failure::Invalid(format!("{supply} vs {demand}: {m}")),
        Failure::Io(m) => Failure::Io(format!("{supply} vs {demand}: {m}")),
    }
}

fn decompose(input: &Path, id: &str, out: Option<&Path>, config: &PipelineConfig) -> Result<(), Failure> {
    config.validate()?;
    let series = ingest_csv(input)?;
    let s = find_series(&series, id)?.restrict(config.window_start, config.window_end);
    let dec = config.stl_config(s.resolution).decompose(&s.values())?;
    let mut buf = Vec::new();
    writeln!(buf, "date,observed,seasonal,trend,remainder").expect("vec write");
    for (t, date) in s.dates().iter().enumerate() {
        writeln!(buf, "{date},{},{},{},{}", dec.observed[t], dec.seasonal[t], dec.trend[t], dec.remainder[t])
            .expect("vec write");
    }
    emit(out, &buf)
}

fn write_quality_csv(table: &QualityTable, buf: &mut Vec<u8>) -> Result<(), Failure> {
    let mut header = vec!["platform".to_string(), "state".into(), "n_posts".into()];
    header.extend(ScoreBucket::ALL.iter().map(|b| b.label().to_string()));
    writeln!(buf, "{}", header.join(",")).expect("vec write");
    for (platform, rows) in &table.platforms {
        for row in rows {
            let pct: Vec<String> = match row.percentages {
                Some(p) => p.iter().map(|v| format!("{v:.2}")).collect(),
                None => vec![String::new(); ScoreBucket::ALL.len()],
            };
            writeln!(buf, "{platform},{},{},{}", row.state.as_str(), row.n_posts, pct.join(",")).expect("vec write");
        }
    }
    Ok(())
}
