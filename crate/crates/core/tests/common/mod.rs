#![allow(dead_code)]

use std::path::Path;

use squeezed_phase::cli::try_main;

/// Runs the CLI in-process with `--out <dir>` appended.
pub fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["sqzphase".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(dir.to_string_lossy().into_owned());
    match try_main(argv) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Header row of a CSV with `#` metadata lines.
pub fn header(csv: &str) -> Vec<String> {
    csv.lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

pub fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

pub fn column(csv: &str, name: &str) -> Vec<f64> {
    let i = header(csv).iter().position(|c| c == name).unwrap();
    rows(csv).iter().map(|r| r[i]).collect()
}

pub const CSV_ARTIFACTS: &[(&str, &[&str])] = &[
    ("limits", &["bounds.csv"]),
    ("sweep-phase", &["sweep_phase.csv"]),
    ("sweep-photons", &["sweep_photons.csv"]),
    (
        "estimate",
        &["batch.csv", "posterior.csv", "posterior_updates.csv"],
    ),
    (
        "track",
        &[
            "track_raw.csv",
            "track_bandpassed.csv",
            "psd_raw.csv",
            "psd_bandpassed.csv",
        ],
    ),
];

/// Small but non-trivial arguments per command.
pub fn quick_args(command: &str) -> Vec<&'static str> {
    match command {
        "limits" => vec!["limits", "--seed", "7"],
        "sweep-phase" => vec![
            "sweep-phase",
            "--seed",
            "7",
            "--phases",
            "0.05:1.5:5",
            "--m",
            "200",
            "--trials",
            "20",
            "--grid-points",
            "500",
        ],
        "sweep-photons" => vec![
            "sweep-photons",
            "--seed",
            "7",
            "--photons",
            "0.5,2,8",
            "--m",
            "200",
            "--trials",
            "20",
        ],
        "estimate" => vec![
            "estimate",
            "--seed",
            "7",
            "--m",
            "300",
            "--grid-points",
            "2000",
        ],
        "track" => vec!["track", "--seed", "7", "--duration", "0.2"],
        _ => unreachable!(),
    }
}
