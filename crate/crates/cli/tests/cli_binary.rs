mod common;

use std::process::{Command, Output};

use common::Fixture;
use sociopose::CliError;

fn sociopose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sociopose")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(sociopose(&[]).status.code(), Some(2));
    assert_eq!(sociopose(&["features", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));

    let fx = Fixture::new(1);
    let cfg = fx.config_file();
    let cfg = cfg.to_str().unwrap();
    let out = sociopose(&["semipartial", "--config", cfg, "--set", "semipartial.positions=[0, 1, 2]"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("6/6/12"), "{}", stderr(&out));
    let out = sociopose(&["encode", "--config", cfg, "--set", "ridge.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let fx = Fixture::new(1);
    let cfg = fx.config_file();
    let out = sociopose(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("sociopose encode"), "{}", stderr(&out));
}

#[test]
fn numerical_failures_map_to_4() {
    let e = sociopose_core::Error::NoConvergence { what: "svd", iterations: 60 };
    assert_eq!(CliError::from(e).exit_code(), 4);
}

#[test]
fn stages_run_from_the_command_line() {
    let fx = Fixture::new(2);
    let cfg = fx.config_file();
    let cfg = cfg.to_str().unwrap();
    for stage in ["features", "encode", "encode-grouped", "semipartial", "reliability", "permtest", "report"] {
        let out = sociopose(&[stage, "--config", cfg]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let manifest: serde_json::Value = serde_json::from_str(&fx.read_out("manifest.json")).unwrap();
    let stages = manifest["stages"].as_object().unwrap();
    assert_eq!(stages.len(), 8, "synth plus seven analysis stages");
    assert!(stages["report"]["outputs"]["report/fig5.csv"].as_str().is_some_and(|d| d.len() == 64));

    let out = sociopose(&["permtest", "--config", cfg, "--mode", "unpaired"]);
    assert!(out.status.success());
    assert!(!fx.read_out("stats/permtest.csv").contains("paired:model"));
}
