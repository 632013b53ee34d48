use std::path::Path;
use std::process::{Command, Output};

use nniqs_core::evaluation::{upscale_diagram, Upscaler};
use nniqs_core::interp::InterpolationMethod;
use nniqs_core::net::{checkpoint, ArchConfig, Network, NetworkState};
use nniqs_core::phase::{linspace, AxisGrid};
use nniqs_core::phd;

fn nniqs(line: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nniqs")).args(line.split_whitespace()).env_clear().output().expect("binary runs")
}

fn ok(line: &str) {
    let out = nniqs(line);
    assert!(out.status.success(), "{line}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&format!("simulate --n 6 --w-over-g 1.0 --grid 12 --out {}", p(d)));
    }
    let fa = std::fs::read(a.join("diagram.phd")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("diagram.phd")).unwrap());
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("simulate.config.json")).unwrap()).unwrap();
    assert_eq!(echo["resolved"]["params"]["n_sites"], 6);
    assert_eq!(phd::decode(&fa).unwrap().values.shape(), (12, 12));
}

#[test]
fn evaluate_identical_files_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(&format!("simulate --n 4 --w-over-g 0.7 --grid 10 --out {}", p(dir.path())));
    let d = dir.path().join("diagram.phd");
    let out = dir.path().join("eval");
    ok(&format!("evaluate --pred {} --truth {} --out {}", p(&d), p(&d), p(&out)));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["whole"]["stats"]["mean"], 0.0);
    assert_eq!(report["whole"]["stats"]["max_after_trim"], 0.0);
    assert_eq!(report["psnr"], 300.0);
    assert!(out.join("errors.csv").exists());
}

#[test]
fn zero_epoch_training_writes_the_initial_network() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&format!(
        "dataset --n-values 2 --w-values 0.5,0.9,1.3 --grid 16 --input-side 4 --train-fraction 0.67 --seed 3 --out {}",
        p(&data)
    ));
    let run = dir.path().join("run");
    ok(&format!(
        "train --manifest {} --epochs 0 --latent-dim 4 --res-blocks 1 --hidden-width 8 --hidden-layers 2 --out {}",
        p(&data.join("manifest.json")),
        p(&run)
    ));
    let saved = std::fs::read(run.join("model.iqs")).unwrap();
    let fresh = NetworkState::new(Network::new(ArchConfig::mini(), 3).unwrap());
    assert_eq!(saved, checkpoint::encode(&fresh));
    assert!(run.join("train.config.json").exists());
}

#[test]
fn subcommand_pipeline_matches_in_process_calls() {
    let dir = tempfile::tempdir().unwrap();
    ok(&format!("simulate --n 4 --w-over-g 1.1 --grid 8 --out {}", p(dir.path())));
    let input_path = dir.path().join("diagram.phd");
    let input = phd::read(&input_path).unwrap();
    let target = AxisGrid::new(linspace(0.1, 2.5, 24), linspace(0.0, 1.4, 24)).unwrap();

    ok(&format!("baseline --method axiscubic --input {} --ratio 3 --out {}", p(&input_path), p(dir.path())));
    let cli = phd::read(dir.path().join("baseline.phd")).unwrap();
    let direct = upscale_diagram(&input, &target, Upscaler::Baseline(InterpolationMethod::AxisCubic)).unwrap();
    assert_eq!(cli, direct);

    let state = NetworkState::new(Network::new(ArchConfig::mini(), 8).unwrap());
    let ckpt = dir.path().join("m.iqs");
    checkpoint::save(&ckpt, &state).unwrap();
    ok(&format!("predict --checkpoint {} --input {} --grid 24 --out {}", p(&ckpt), p(&input_path), p(dir.path())));
    let cli = phd::read(dir.path().join("prediction.phd")).unwrap();
    assert_eq!(cli, upscale_diagram(&input, &target, Upscaler::Network(&state.network)).unwrap());
}

#[test]
fn failures_exit_with_distinct_codes_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let usage = nniqs("simulate --bogus");
    assert_eq!(usage.status.code(), Some(2));
    let invalid = nniqs(&format!("simulate --n 40 --w-over-g 1 --out {}", p(dir.path())));
    assert_eq!(invalid.status.code(), Some(3));
    let stderr = String::from_utf8(invalid.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error kind=invalid-parameter code=3"));
    let missing =
        nniqs(&format!("baseline --method bilinear --input /nonexistent.phd --grid 4 --out {}", p(dir.path())));
    assert_eq!(missing.status.code(), Some(4));
    let junk = dir.path().join("junk.phd");
    std::fs::write(&junk, b"nope").unwrap();
    let format = nniqs(&format!("baseline --method bilinear --input {} --grid 4 --out {}", p(&junk), p(dir.path())));
    assert_eq!(format.status.code(), Some(5));
}

#[test]
fn environment_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nniqs"))
        .args(["simulate", "--n", "4", "--w-over-g", "1.0", "--out", p(dir.path())])
        .env_clear()
        .env("NNIQS_GRID", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(phd::read(dir.path().join("diagram.phd")).unwrap().values.shape(), (7, 7));
}
