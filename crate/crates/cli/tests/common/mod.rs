#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clap::Parser;
use labelforge::cli::Cli;
use labelforge::error::CliError;
use serde_json::Value;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

/// Copies the end-to-end config into `dir` so its cache lands there too.
pub fn e2e_config(dir: &Path) -> PathBuf {
    let dst = dir.join("labelforge.toml");
    std::fs::copy(fixtures().join("e2e/labelforge.toml"), &dst).unwrap();
    dst
}

/// Runs one invocation in-process.
pub fn run(config: &Path, args: &[&str]) -> Result<Value, CliError> {
    let mut argv = vec![
        "labelforge".to_string(),
        "--config".into(),
        config.to_string_lossy().into_owned(),
    ];
    argv.extend(args.iter().map(|s| s.to_string()));
    labelforge::run(Cli::try_parse_from(argv).expect("valid arguments"))
}

pub fn ok(config: &Path, args: &[&str]) -> Value {
    match run(config, args) {
        Ok(v) => v,
        Err(e) => panic!("{args:?} failed: {e}"),
    }
}

pub fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// merge, sample, screen (auto-keep), finalize, build, evaluate, analyze.
pub fn full_pipeline(dir: &Path) -> Vec<Value> {
    let cfg = e2e_config(dir);
    let o = |n: &str| p(dir, n);
    vec![
        ok(
            &cfg,
            &[
                "merge",
                "--dreaddit",
                &fixture("merge/dreaddit.csv"),
                "--depseverity",
                &fixture("merge/depseverity.csv"),
                "-o",
                &o("out/base.jsonl"),
            ],
        ),
        ok(
            &cfg,
            &[
                "sample",
                "--rmhd",
                &fixture("rmhd/rmhd.csv"),
                "-o",
                &o("out/sample.jsonl"),
            ],
        ),
        ok(
            &cfg,
            &[
                "screen",
                "--input",
                &o("out/sample.jsonl"),
                "--queue",
                &o("out/queue.json"),
                "--auto-keep-all",
            ],
        ),
        ok(
            &cfg,
            &[
                "finalize",
                "--input",
                &o("out/sample.jsonl"),
                "--queue",
                &o("out/queue.json"),
                "-o",
                &o("out/clean.jsonl"),
            ],
        ),
        ok(
            &cfg,
            &["build", "--input", &o("out/clean.jsonl"), "-o", &o("out/spaade.jsonl")],
        ),
        ok(
            &cfg,
            &[
                "evaluate",
                "--input",
                &o("out/base.jsonl"),
                "--model",
                "stub-a",
                "-o",
                &o("out/eval-a.json"),
            ],
        ),
        ok(
            &cfg,
            &[
                "evaluate",
                "--input",
                &o("out/base.jsonl"),
                "--vote",
                "stub-a,stub-b,stub-c",
                "-o",
                &o("out/eval-vote.json"),
            ],
        ),
        ok(
            &cfg,
            &[
                "analyze",
                "--input",
                &o("out/spaade.jsonl"),
                "-o",
                &o("out/matrix.json"),
            ],
        ),
        ok(
            &cfg,
            &[
                "report",
                "--evaluations",
                &o("out/eval-a.json"),
                &o("out/eval-vote.json"),
                "-o",
                &o("out/report.txt"),
            ],
        ),
    ]
}

/// Every file under `dir/out`, sorted by name.
pub fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
