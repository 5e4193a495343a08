//! End-to-end pipeline checks through the command layer and the
//! compiled binary.

use hfei::cli::{cmd_estimate, cmd_regime, RunConfig};
use hfei::panel::{read_growth_panel, write_growth_panel, write_panel_meta};
use hfei::simulate::{simulate_panel, RegimeTruth, TrueParams};
use hfei::statespace::ModelSpec;

use std::process::Command;

/// Two-regime data, estimated and classified end to end: simulate a
/// panel whose factor mean switches regimes, run `estimate`, feed the
/// stored factor into `regime`, and score the emitted probabilities
/// against the simulated truth.
#[test]
fn two_regime_data_recovers_regimes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ModelSpec::new(1, 0, 2);
    spec.p_f = 2;
    spec.p_q = 1;
    let mut params = TrueParams::baseline(&spec);
    params.phi = vec![0.3, 0.0];
    params.sigma_factor = 0.5;
    params.sigma_idio = vec![0.3, 0.25, 0.35];
    params.loadings[[1, 0]] = 1.0;
    params.loadings[[2, 0]] = 0.8;
    params.regime = Some(RegimeTruth {
        mu_recession: -2.0,
        mu_expansion: 2.0,
        stay_expansion: 0.95,
        stay_recession: 0.95,
    });
    let (panel, truth) = simulate_panel(&params, &spec, 480, 77).unwrap();
    let regimes = truth.regimes.unwrap();

    let panel_path = dir.path().join("panel.csv");
    let meta_path = dir.path().join("panel_meta.csv");
    write_growth_panel(&panel, &panel_path).unwrap();
    write_panel_meta(&panel, &meta_path).unwrap();

    let mut cfg = RunConfig::new();
    cfg.set("panel", panel_path.to_str().unwrap());
    cfg.set("panel_meta", meta_path.to_str().unwrap());
    cfg.set("gdp_series", "q0");
    cfg.set("seed", "5");
    cfg.set("iterations", "600");
    cfg.set("burn_in", "200");
    cfg.set("p_q", "1");
    let est_out = dir.path().join("est");
    cfg.set("out", est_out.to_str().unwrap());
    cmd_estimate(&cfg).unwrap();

    let mut reg_cfg = RunConfig::new();
    reg_cfg.set("draws", est_out.join("draws").to_str().unwrap());
    reg_cfg.set("seed", "6");
    reg_cfg.set("regime_iterations", "2000");
    reg_cfg.set("regime_burn_in", "500");
    let reg_out = dir.path().join("reg");
    reg_cfg.set("out", reg_out.to_str().unwrap());
    cmd_regime(&reg_cfg).unwrap();

    let table =
        std::fs::read_to_string(reg_out.join("recession_probability.csv")).unwrap();
    let mut correct = 0usize;
    let mut total = 0usize;
    for (lineno, line) in table.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let prob: f64 = parts[2].parse().unwrap();
        let t = lineno - 1;
        if (prob > 0.5) == (regimes[t] == 0) {
            correct += 1;
        }
        total += 1;
    }
    assert_eq!(total, 480);
    let accuracy = correct as f64 / total as f64;
    assert!(
        accuracy >= 0.95,
        "end-to-end regime accuracy {accuracy:.3} below 0.95"
    );
    println!("end-to-end regime accuracy: {:.1}%", accuracy * 100.0);
}

/// The prepared panel file round-trips through the binary and the
/// library reader agrees with it.
#[test]
fn binary_prepare_matches_library_reader() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = String::new();
    let day0 = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    for day in 0..800i64 {
        let date = day0 + chrono::Duration::days(day);
        let v = 50.0 + (day as f64 * 0.02).cos() * 3.0 + day as f64 * 0.01;
        raw.push_str(&format!("w0,{date},{v}\n"));
    }
    let data_path = dir.path().join("raw.csv");
    let meta_path = dir.path().join("meta.csv");
    std::fs::write(&data_path, raw).unwrap();
    std::fs::write(
        &meta_path,
        "series_id,frequency,kind,zero_fill\nw0,weekly,stock,false\n",
    )
    .unwrap();
    let out = dir.path().join("out");

    let status = Command::new(env!("CARGO_BIN_EXE_hfei"))
        .args([
            "prepare",
            "--data",
            data_path.to_str().unwrap(),
            "--meta",
            meta_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let growth = read_growth_panel(&out.join("panel.csv"), &out.join("panel_meta.csv")).unwrap();
    assert_eq!(growth.n_series(), 1);
    assert!(growth.len() >= 96);
}

/// Failures exit nonzero and print a categorized error line.
#[test]
fn binary_reports_categorized_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("raw.csv");
    let meta_path = dir.path().join("meta.csv");
    std::fs::write(&data_path, "a,2020-01-01,1.0\na,2020-01-01,2.0\n").unwrap();
    std::fs::write(
        &meta_path,
        "series_id,frequency,kind,zero_fill\na,weekly,stock,false\n",
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_hfei"))
        .args([
            "prepare",
            "--data",
            data_path.to_str().unwrap(),
            "--meta",
            meta_path.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.starts_with("error[input]:"),
        "stderr was: {stderr}"
    );
    assert!(stderr.contains("duplicate"));

    // Missing required configuration is a config error.
    let output = Command::new(env!("CARGO_BIN_EXE_hfei"))
        .args(["estimate", "--out", dir.path().join("x").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.starts_with("error[config]:"),
        "stderr was: {stderr}"
    );
}
