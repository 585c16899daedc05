use std::fs;
use std::process::Command;

use anticoord::experiment::{
    emit, emit_series, read_json, read_series_csv, read_summary_csv, run_specs, Algorithm,
    ExperimentSpec, OutputFormat, SeriesMode, SummaryRow,
};
use anticoord::GameConfig;

const SUMMARY_HEADER: &str = "algorithm,R,K,N,p_backoff,delta,t_ind,runs,convergence_step_mean,\
convergence_step_std,jain_mean,payoff_mean,payoff_std,utilization_final";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anticoord"))
}

fn rows() -> Vec<anticoord::ReportRow> {
    let game = GameConfig::new(8, 2, 2_000, 5).unwrap();
    let specs = [
        ExperimentSpec::new(game, Algorithm::Canony).with_runs(3).with_series(SeriesMode::Log { per_decade: 5 }),
        ExperimentSpec::new(game, Algorithm::Exp3).with_runs(3),
    ];
    run_specs(&specs).unwrap()
}

#[test]
fn summary_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.csv");
    let rows = rows();
    let written = emit(&rows, OutputFormat::Csv, &path).unwrap();
    assert_eq!(written.len(), 2);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
    let parsed = read_summary_csv(&path).unwrap();
    let expected: Vec<SummaryRow> = rows.iter().map(SummaryRow::from).collect();
    assert_eq!(parsed, expected);

    let series = read_series_csv(&written[1]).unwrap();
    let report = &rows[0].report;
    assert_eq!(series.len(), report.series_steps.len());
    for (s, (&step, &u)) in series.iter().zip(report.series_steps.iter().zip(&report.utilization_series)) {
        assert_eq!((s.step, s.utilization_mean), (step, u));
    }
}

#[test]
fn json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let rows = rows();
    emit(&rows, OutputFormat::Json, &path).unwrap();
    assert_eq!(read_json(&path).unwrap(), rows);
}

#[test]
fn empty_series_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    emit_series(&rows()[1].report, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "step,utilization_mean,collisions_mean\n");
}

#[test]
fn unconverged_mean_is_an_empty_field() {
    let game = GameConfig::new(16, 4, 40, 0).unwrap();
    let rows = run_specs(&[ExperimentSpec::new(game, Algorithm::Exp3).with_runs(2)]).unwrap();
    let mut out = Vec::new();
    anticoord::experiment::write_summary_csv(&rows, &mut out).unwrap();
    let line = String::from_utf8(out).unwrap().lines().nth(1).unwrap().to_string();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), 14);
    assert_eq!(fields[8], "");
    assert_eq!(fields[9], "");
}

#[test]
fn cli_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.json"));
        let status = bin()
            .args(["--algorithm", "exp4p", "--agents", "8", "--resources", "2", "--horizon", "3000"])
            .args(["--runs", "3", "--seed", "9", "--format", "json", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        files.push(fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "algorithm = \"canony\"\nagents = 8\nresources = 2\nruns = 2\nhorizon = 500\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).args(["--runs", "3", "--backoff", "0.25"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("canony,2,4,8,0.25,0.99,0,3,"), "{row}");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["--agents", "4", "--resources", "2", "--runs", "1", "--horizon", "50"]), Some(0));
    assert_eq!(code(&["--agents", "0"]), Some(2));
    assert_eq!(code(&["--backoff", "1.5"]), Some(2));
    assert_eq!(code(&["--algorithm", "nope"]), Some(2));
    assert_eq!(code(&["--preset", "table2", "--agents", "4"]), Some(2));
    assert_eq!(code(&["--bogus"]), Some(2));
    assert_eq!(code(&["--algorithm", "exp4", "--agents", "64", "--resources", "8", "--experts", "unrestricted"]), Some(3));
    assert_eq!(
        code(&["--preset", "table2", "--experts", "unrestricted", "--runs", "1"]),
        Some(3)
    );
}
