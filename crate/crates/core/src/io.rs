//! CSV ingestion of long-format series, credibility ratings and posts.
//!
//! Series files carry the header
//! `series_id,role,source,region,topic,date,value`. Resolution is inferred
//! per series: weekly when every gap between consecutive dates is a whole
//! number of weeks, daily otherwise.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::analytics::{normalize_domain, CredibilityRating, PostRecord};
use crate::error::{Error, Result};
use crate::series::{Resolution, Role, SeriesMeta, TimeSeries};

pub const SERIES_HEADER: [&str; 7] = ["series_id", "role", "source", "region", "topic", "date", "value"];
pub const RATINGS_HEADER: [&str; 2] = ["domain", "score"];
pub const POSTS_HEADER: [&str; 5] = ["timestamp", "domain", "platform", "region", "topic"];

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(r)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field_count(record: &csv::StringRecord, expected: usize) -> Result<()> {
    if record.len() != expected {
        return Err(Error::MalformedRow {
            line: line_of(record),
            reason: format!("expected {expected} fields, found {}", record.len()),
        });
    }
    Ok(())
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::MalformedRow { line, reason: format!("bad date {s:?}: {e}") })
}

fn parse_number(s: &str, line: u64) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::MalformedRow { line, reason: format!("bad number {s:?}") })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow { line, reason: format!("non-finite number {s:?}") });
    }
    Ok(v)
}

/// Reads a long-format series file into one series per id, ordered by id.
pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<TimeSeries<f64>>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &SERIES_HEADER)?;
    let mut metas: BTreeMap<String, SeriesMeta> = BTreeMap::new();
    let mut observations: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, NaiveDate)> = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        field_count(&record, SERIES_HEADER.len())?;
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow { line, reason: "empty series_id".into() });
        }
        let role = Role::parse(&record[1]).ok_or_else(|| Error::UnknownRole { line, role: record[1].to_string() })?;
        let date = parse_date(&record[5], line)?;
        let value = parse_number(&record[6], line)?;
        if value < 0.0 {
            return Err(Error::NegativeValue { line, value });
        }
        let meta = SeriesMeta {
            id: id.clone(),
            role,
            source: record[2].to_string(),
            region: record[3].to_string(),
            topic: record[4].to_string(),
        };
        match metas.get(&id) {
            Some(existing) if *existing != meta => {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("metadata of series {id:?} differs from its first row"),
                });
            }
            Some(_) => {}
            None => {
                metas.insert(id.clone(), meta);
            }
        }
        if !seen.insert((id.clone(), date)) {
            return Err(Error::DuplicateTimestamp { line, series: id, date });
        }
        observations.entry(id).or_default().push((date, value));
    }

    metas
        .into_iter()
        .map(|(id, meta)| {
            let mut obs = observations.remove(&id).unwrap_or_default();
            obs.sort_by_key(|&(d, _)| d);
            TimeSeries::from_observations(meta, infer_resolution(&obs), &obs)
        })
        .collect()
}

fn infer_resolution(obs: &[(NaiveDate, f64)]) -> Resolution {
    let weekly = obs.len() >= 2 && obs.windows(2).all(|w| (w[1].0 - w[0].0).num_days() % 7 == 0);
    if weekly {
        Resolution::Weekly
    } else {
        Resolution::Daily
    }
}

pub fn ingest_csv(path: &Path) -> Result<Vec<TimeSeries<f64>>> {
    read_series_csv(File::open(path)?)
}

/// Writes series back in the long format accepted by [`read_series_csv`].
pub fn write_series_csv<W: Write>(series: &[TimeSeries<f64>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SERIES_HEADER)?;
    for s in series {
        for p in s.points() {
            out.write_record([
                s.meta.id.as_str(),
                s.meta.role.as_str(),
                &s.meta.source,
                &s.meta.region,
                &s.meta.topic,
                &p.date.to_string(),
                &p.value.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn find_series<'a>(series: &'a [TimeSeries<f64>], id: &str) -> Result<&'a TimeSeries<f64>> {
    series.iter().find(|s| s.meta.id == id).ok_or_else(|| Error::UnknownSeries(id.to_string()))
}

/// Reads `domain,score` rows into a map keyed by normalized domain.
pub fn read_ratings_csv<R: Read>(r: R) -> Result<HashMap<String, f64>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &RATINGS_HEADER)?;
    let mut ratings = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        field_count(&record, RATINGS_HEADER.len())?;
        let score = parse_number(&record[1], line)?;
        let rating = CredibilityRating::new(&record[0], score)
            .map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        ratings.insert(rating.domain, rating.score);
    }
    Ok(ratings)
}

pub fn read_posts_csv<R: Read>(r: R) -> Result<Vec<PostRecord>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &POSTS_HEADER)?;
    let mut posts = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        field_count(&record, POSTS_HEADER.len())?;
        posts.push(PostRecord {
            timestamp: parse_date(&record[0], line)?,
            domain: normalize_domain(&record[1]),
            platform: record[2].to_string(),
            region: record[3].to_string(),
            topic: record[4].to_string(),
        });
    }
    Ok(posts)
}
