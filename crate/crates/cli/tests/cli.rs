use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infodelta"));
    cmd.env_remove("INFODELTA_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Two supply and one demand series over 120 days; supply `fb` spikes on day 60.
fn fixture(dir: &Path) -> String {
    let mut csv = String::from("series_id,role,source,region,topic,date,value\n");
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    for t in 0..120 {
        let date = start + chrono::Duration::days(t);
        let wobble = ((t * 37 % 11) as f64) * 0.3;
        let fb = if t == 60 { 90.0 } else { 10.0 + wobble };
        writeln!(csv, "fb,supply,facebook,IT,pfizer,{date},{fb}").unwrap();
        writeln!(csv, "tw,supply,twitter,IT,pfizer,{date},{}", 20.0 + wobble).unwrap();
        writeln!(csv, "wiki,demand,wikipedia,IT,pfizer,{date},{}", 30.0 + ((t * 13 % 7) as f64)).unwrap();
    }
    let path = dir.join("series.csv");
    std::fs::write(&path, csv).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_single_pair_to_stdout() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let out = run(&["analyze", "--input", &input, "--pair", "fb:wiki", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("date,delta,capped_delta,regime,is_anomaly,sign,band_lo,band_hi\n"));
    let spike = text.lines().find(|l| l.starts_with("2021-03-02")).unwrap();
    assert!(spike.contains("overabundance,true,positive"), "{spike}");
}

#[test]
fn analyze_all_pairs_writes_one_report_each() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let out_dir = dir.path().join("reports");
    std::fs::create_dir(&out_dir).unwrap();
    let out = run(&["analyze", "--input", &input, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("fb__wiki.json").exists());
    assert!(out_dir.join("tw__wiki.json").exists());

    // Rerunning gives identical bytes.
    let first = std::fs::read(out_dir.join("fb__wiki.json")).unwrap();
    assert!(run(&["analyze", "--input", &input, "--out-dir", out_dir.to_str().unwrap()]).status.success());
    assert_eq!(first, std::fs::read(out_dir.join("fb__wiki.json")).unwrap());
}

#[test]
fn several_pairs_need_an_output_directory() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let out = run(&["analyze", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    assert_eq!(run(&["analyze", "--input", "/nonexistent/series.csv", "--pair", "a:b"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--input", &input, "--pair", "fb:wiki", "--alpha", "0"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--input", &input, "--pair", "wiki:fb"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--input", &input, "--pair", "fb:nope"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--bogus"]).status.code(), Some(1));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "series_id,role,source,region,topic,date,value\nx,supply,a,b,c,2021-01-01,-3\n").unwrap();
    let out = run(&["analyze", "--input", bad.to_str().unwrap(), "--pair", "x:y"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn config_file_from_env_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let cfg = dir.path().join("infodelta.toml");
    std::fs::write(&cfg, "gap_tolerance = 5\nwindow_start = \"2021-02-01\"\n").unwrap();
    let report = dir.path().join("r");
    std::fs::create_dir(&report).unwrap();
    let out = bin()
        .env("INFODELTA_CONFIG", &cfg)
        .args([
            "analyze",
            "--input",
            &input,
            "--pair",
            "fb:wiki",
            "--out-dir",
            report.to_str().unwrap(),
            "--gap-tolerance",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(report.join("fb__wiki.json")).unwrap();
    assert!(json.contains("\"gap_tolerance\": 1"));
    assert!(json.contains("\"window_start\": \"2021-02-01\""));
    assert!(json.contains("\"rows\""));

    let missing = bin()
        .env("INFODELTA_CONFIG", dir.path().join("absent.toml"))
        .args(["analyze", "--input", &input])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(&cfg, "alhpa = 1\n").unwrap();
    let typo = bin().env("INFODELTA_CONFIG", &cfg).args(["analyze", "--input", &input]).output().unwrap();
    assert_eq!(typo.status.code(), Some(1));
}

#[test]
fn persistence_and_credibility_from_saved_report() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let report = dir.path().join("report.json");
    let out = run(&["analyze", "--input", &input, "--pair", "fb:wiki"]);
    std::fs::write(&report, &out.stdout).unwrap();

    let runs = run(&["persistence", "--report", report.to_str().unwrap()]);
    assert!(runs.status.success());
    let text = stdout(&runs);
    assert!(text.starts_with("sign,start,end,length,bridged_gaps\n"));
    assert!(text.contains("positive,2021-03-02,2021-03-02,1,0"), "{text}");

    let ratings = dir.path().join("ratings.csv");
    std::fs::write(&ratings, "domain,score\ngood.org,100\nbad.net,20\n").unwrap();
    let posts = dir.path().join("posts.csv");
    std::fs::write(
        &posts,
        "timestamp,domain,platform,region,topic\n2021-03-02,good.org,facebook,IT,pfizer\n2021-03-02,https://bad.net/x,facebook,IT,pfizer\n2021-01-05,good.org,facebook,IT,pfizer\n",
    )
    .unwrap();
    let table = run(&[
        "credibility",
        "--report",
        report.to_str().unwrap(),
        "--ratings",
        ratings.to_str().unwrap(),
        "--posts",
        posts.to_str().unwrap(),
    ]);
    assert!(table.status.success(), "{}", String::from_utf8_lossy(&table.stderr));
    let text = stdout(&table);
    let positive = text.lines().find(|l| l.starts_with("facebook,positive")).unwrap();
    assert!(positive.starts_with("facebook,positive_anomaly,2,50.00,"), "{positive}");
    assert!(positive.ends_with(",50.00"), "{positive}");
}

#[test]
fn decompose_and_small_benchmark() {
    let dir = TempDir::new().unwrap();
    let input = fixture(dir.path());
    let out = run(&["decompose", "--input", &input, "--series", "wiki"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "date,observed,seasonal,trend,remainder");
    assert_eq!(text.lines().count(), 121);

    let bench = run(&["benchmark", "--repetitions", "2", "--seed", "7"]);
    assert!(bench.status.success());
    let text = stdout(&bench);
    assert!(text.starts_with("sigma,mean_precision,mean_f1,n_runs\n"));
    assert_eq!(text.lines().count(), 30);
    assert_eq!(text, stdout(&run(&["benchmark", "--repetitions", "2", "--seed", "7"])));
}
