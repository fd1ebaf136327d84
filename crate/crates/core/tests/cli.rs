mod common;

use common::*;

#[test]
fn same_seed_gives_identical_csv_bytes() {
    for (command, files) in CSV_ARTIFACTS {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run_in(a.path(), &quick_args(command)), 0, "{command}");
        assert_eq!(run_in(b.path(), &quick_args(command)), 0, "{command}");
        for f in *files {
            assert_eq!(read(a.path(), f), read(b.path(), f), "{command}/{f}");
        }
    }
}

#[test]
fn different_seed_changes_monte_carlo_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = quick_args("estimate");
    assert_eq!(run_in(a.path(), &args), 0);
    args[2] = "8";
    assert_eq!(run_in(b.path(), &args), 0);
    assert_ne!(read(a.path(), "batch.csv"), read(b.path(), "batch.csv"));
}

#[test]
fn csv_metadata_header() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &quick_args("sweep-photons")), 0);
    let csv = read(d.path(), "sweep_photons.csv");
    let meta: Vec<&str> = csv.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(
        meta[0],
        format!("# sqzphase {}", squeezed_phase::cli::ARTIFACT_VERSION)
    );
    for line in [
        "# command = sweep-photons",
        "# seed = 7",
        "# eta = 0.89",
        "# m = 200",
    ] {
        assert!(meta.contains(&line), "missing {line}");
    }
    // output location is not part of the artifact
    assert!(!csv.contains(&d.path().to_string_lossy().to_string()));
}

#[test]
fn limits_schema() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["limits", "--photons", "1,2,4"]), 0);
    let csv = read(d.path(), "bounds.csv");
    let h = header(&csv);
    for c in [
        "n",
        "sigma_sqz_ideal",
        "sigma_sqz_lossy",
        "sigma_snl",
        "sigma_noon_ideal",
        "sigma_noon_lossy",
        "sigma_disp_sqz",
        "fisher_sqz_lossy",
    ] {
        assert!(h.contains(&c.to_string()), "{c}");
    }
    assert_eq!(column(&csv, "n"), vec![1.0, 2.0, 4.0]);
    let snl = column(&csv, "sigma_snl");
    assert!((snl[2] - 0.5).abs() < 1e-15);
    let j = json(d.path(), "limits.json");
    let x = j["crossover_n"].as_f64().unwrap();
    assert!((x - 3.45).abs() < 0.15);
    assert!(read(d.path(), "bounds.svg").starts_with("<svg"));
}

#[test]
fn limits_without_loss_has_no_crossover() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(d.path(), &["limits", "--eta", "1", "--photons", "1"]),
        0
    );
    let j = json(d.path(), "limits.json");
    assert!(j["crossover_n"].is_null());
    assert!(j["per_photon_fisher_limit"].is_null());
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["limits", "--photons", ""],
        vec!["limits", "--photons", "4,2"],
        vec!["limits", "--eta", "1.5"],
        vec!["limits", "--eta", "0"],
        vec!["sweep-phase", "--phases", "0,1"],
        vec!["sweep-phase", "--m", "0"],
        vec!["sweep-photons", "--trials", "1"],
        vec!["estimate", "--phi", "2"],
        vec!["estimate", "--checkpoints", "1.5"],
        vec!["estimate", "--input", "/nonexistent/batch.csv"],
        vec!["track", "--tone-freq", "6000"],
        vec!["track", "--band-lo", "4000", "--band-hi", "2000"],
        vec!["track", "--jitter", "-1"],
        vec!["limits", "--unknown-flag"],
    ] {
        let code = run_in(d.path(), &args);
        let want = if args.contains(&"--input") { 1 } else { 2 };
        assert_eq!(code, want, "{args:?}");
    }
}

#[test]
fn non_finite_result_exits_3() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["limits", "--photons", "1e200"]), 3);
    assert!(!d.path().join("bounds.csv").exists());
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sqzphase");
    let d = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(bin)
        .args(["limits", "--photons", "", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("empty grid"));
    let ok = std::process::Command::new(bin)
        .args(["limits", "--photons", "1,2", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("bounds.csv"));
}

#[test]
fn config_file_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.conf");
    std::fs::write(&cfg, "# limits run\neta = 0.5\nphotons = 1,2\nseed = 3\n").unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    let out = d.path().join("a");
    std::fs::create_dir(&out).unwrap();
    assert_eq!(
        run_in(&out, &["limits", "--config", &cfg, "--eta", "0.8"]),
        0
    );
    let csv = read(&out, "bounds.csv");
    assert!(csv.contains("# eta = 0.8\n"));
    assert!(csv.contains("# photons = 1,2\n"));
    assert!(csv.contains("# seed = 3\n"));
    assert_eq!(column(&csv, "n"), vec![1.0, 2.0]);

    let bad = d.path().join("bad.conf");
    std::fs::write(&bad, "etaa = 0.5\n").unwrap();
    assert_eq!(
        run_in(&out, &["limits", "--config", &bad.to_string_lossy()]),
        2
    );
}

#[test]
fn config_may_set_output_directory() {
    let d = tempfile::tempdir().unwrap();
    let target = d.path().join("from_config");
    let cfg = d.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!("out = {}\nphotons = 1\n", target.to_string_lossy()),
    )
    .unwrap();
    let code = squeezed_phase::cli::main_with_args([
        "sqzphase",
        "limits",
        "--config",
        &cfg.to_string_lossy(),
    ]);
    assert_eq!(code, 0);
    assert!(target.join("bounds.csv").exists());
}

#[test]
fn sweep_phase_schema_and_trials_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &quick_args("sweep-phase")), 0);
    let csv = read(d.path(), "sweep_phase.csv");
    assert_eq!(
        header(&csv),
        [
            "n",
            "phi_true",
            "var_estimates",
            "mean_width",
            "crb",
            "mean_estimate",
            "clamped_fraction"
        ]
    );
    assert_eq!(rows(&csv).len(), 5);
    assert!(csv.contains("# snl_var[n=1.8] = "));
    assert!(csv.contains("# noon4_var[n=1.8] = 0.0003125\n"));
    assert!(read(d.path(), "sweep_phase_polar.svg").contains("<polyline"));

    let e = tempfile::tempdir().unwrap();
    let args = [
        "sweep-phase",
        "--trials",
        "1",
        "--phases",
        "0.1,0.5",
        "--m",
        "100",
        "--grid-points",
        "300",
    ];
    assert_eq!(run_in(e.path(), &args), 0);
    let csv = read(e.path(), "sweep_phase.csv");
    assert!(!header(&csv).contains(&"var_estimates".to_string()));
    assert!(column(&csv, "mean_width").iter().all(|w| *w > 0.0));
    assert!(json(e.path(), "sweep_phase.json")["cases"][0]["min_var"].is_null());
}

#[test]
fn sweep_photons_single_row_and_pure_states_track_bound() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "sweep-photons",
        "--photons",
        "2",
        "--eta",
        "1",
        "--trials",
        "200",
        "--m",
        "1000",
    ];
    assert_eq!(run_in(d.path(), &args), 0);
    let csv = read(d.path(), "sweep_photons.csv");
    assert_eq!(rows(&csv).len(), 1);
    let mc = column(&csv, "sigma_mc")[0];
    let bound = column(&csv, "sigma_sqz_ideal")[0];
    assert!((mc / bound - 1.0).abs() < 0.15, "{mc} vs {bound}");
    let phi = column(&csv, "phi_opt")[0];
    let r = column(&csv, "r")[0];
    assert!((phi - 0.5 * (2.0 * r).tanh().acos()).abs() < 1e-12);
}

#[test]
fn estimate_outputs_and_import_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "estimate",
        "--photons",
        "1.8",
        "--phi",
        "0.3",
        "--m",
        "500",
        "--checkpoints",
        "1,10,100,5000",
        "--grid-points",
        "3000",
    ];
    assert_eq!(run_in(d.path(), &args), 0);
    let post = read(d.path(), "posterior.csv");
    assert_eq!(header(&post), ["phi", "density"]);
    let density = column(&post, "density");
    assert_eq!(density.len(), 3000);
    let step = std::f64::consts::FRAC_PI_2 / 2999.0;
    let mass: f64 = density.iter().sum::<f64>() * step - 0.5 * step * (density[0] + density[2999]);
    assert!((mass - 1.0).abs() < 1e-6);
    assert_eq!(
        header(&read(d.path(), "posterior_updates.csv")),
        [
            "phi",
            "density_m1",
            "density_m10",
            "density_m100",
            "density_m500"
        ]
    );
    let est = json(d.path(), "estimate.json");
    for key in ["map", "width", "m", "clamped"] {
        assert!(!est[key].is_null(), "{key}");
    }
    assert_eq!(est["m"], 500);
    assert!((est["map"].as_f64().unwrap() - 0.3).abs() < 0.05);
    let meta = json(d.path(), "batch.json");
    assert_eq!(meta["m"], 500);
    assert_eq!(meta["phi_true"], 0.3);

    // re-import the batch through its sidecar
    let e = tempfile::tempdir().unwrap();
    let input = d.path().join("batch.csv");
    let code = run_in(
        e.path(),
        &[
            "estimate",
            "--input",
            &input.to_string_lossy(),
            "--grid-points",
            "3000",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(read(e.path(), "batch.csv"), {
        // metadata differs, samples do not
        let a = read(d.path(), "batch.csv");
        let b = read(e.path(), "batch.csv");
        assert_eq!(rows(&a), rows(&b));
        b
    });
    let again = json(e.path(), "estimate.json");
    assert_eq!(again["map"], est["map"]);
    assert_eq!(again["width"], est["width"]);
}

#[test]
fn track_outputs() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &quick_args("track")), 0);
    for f in ["track_raw.csv", "track_bandpassed.csv"] {
        let csv = read(d.path(), f);
        assert_eq!(header(&csv), ["t", "delta_phi"]);
        assert_eq!(rows(&csv).len(), 2000);
        assert!(csv.contains("# state_r = "));
    }
    for f in ["psd_raw.csv", "psd_bandpassed.csv"] {
        assert_eq!(header(&read(d.path(), f)), ["freq_hz", "psd"]);
    }
    let j = json(d.path(), "track.json");
    assert!((j["state"]["n"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert_eq!(j["state"]["eta"], 0.89);
    assert!(read(d.path(), "psd.svg").contains("</svg>"));
}

#[test]
fn track_null_tone_has_no_peak() {
    for seed in ["1", "2", "3"] {
        let d = tempfile::tempdir().unwrap();
        let args = ["track", "--tone-amp", "0", "--seed", seed];
        assert_eq!(run_in(d.path(), &args), 0);
        let j = json(d.path(), "track.json");
        let db = j["spectrum"]["tone_peak_over_floor_db"].as_f64().unwrap();
        assert!(db < 3.0, "seed {seed}: {db} dB");
        assert!(j["tone"]["relative_error"].is_null());
    }
}
