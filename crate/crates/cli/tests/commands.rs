mod common;

use std::path::Path;
use std::process::Command;

use common::{e2e_config, fixture, ok, p, run};
use labelforge::review::{Decision, ReviewQueue};
use labelforge_core::dataset_io::load_dataset;
use labelforge_core::{LabelSource, LabelState, PromptKind};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_labelforge"))
}

#[test]
fn missing_input_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/base.jsonl");
    let out = bin()
        .args(["evaluate", "--input"])
        .arg(&missing)
        .args(["--model", "stub", "-o"])
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["exit_code"], 2);
    assert_eq!(v["path"], missing.to_string_lossy().as_ref());
}

#[test]
fn usage_and_config_errors_exit_1() {
    let out = bin().args(["evaluate", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[sample]\ninitial_per_disorder = 10\nfinal_per_disorder = 20\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["report", "--evaluations", "x", "-o", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(out.stderr.trim_ascii_end().rsplit(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(v["error"], "user");
}

#[test]
fn evaluate_twice_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2e_config(dir.path());
    let base = p(dir.path(), "base.jsonl");
    ok(
        &cfg,
        &[
            "merge",
            "--dreaddit",
            &fixture("merge/dreaddit.csv"),
            "--depseverity",
            &fixture("merge/depseverity.csv"),
            "-o",
            &base,
        ],
    );
    let mut outputs = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let out = p(dir.path(), name);
        let s = ok(
            &cfg,
            &[
                "evaluate",
                "--input",
                &base,
                "--prompt",
                "single_label",
                "--model",
                "stub-a",
                "-o",
                &out,
            ],
        );
        assert_eq!(s["posts"], 194);
        outputs.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(format!("{out}.txt")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let second: Value = serde_json::from_slice(&std::fs::read(p(dir.path(), "r2.json.run.json")).unwrap()).unwrap();
    assert_eq!(second["provider_calls"], 0, "second run is served from the cache");
}

/// Stub answers are cached per model id, so each rate gets its own model.
fn screening_config(dir: &Path, positive_rate: f64) -> std::path::PathBuf {
    let cfg = dir.join(format!("screen-{positive_rate}.toml"));
    std::fs::write(
        &cfg,
        format!(
            "seed = 3\n[sample]\ninitial_per_disorder = 6\nfinal_per_disorder = 5\ncontrols = 5\n\
             [[providers]]\nprovider = \"stub\"\nmodel_id = \"s{positive_rate}\"\nrequests_per_minute = 1000000\n\
             stub = {{ seed = 1, positive_rate = {positive_rate} }}\n"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn screening_routes_by_prediction_and_skips_controls() {
    let dir = tempfile::tempdir().unwrap();
    let sample = p(dir.path(), "sample.jsonl");

    let yes = screening_config(dir.path(), 1.0);
    ok(&yes, &["sample", "--rmhd", &fixture("rmhd/rmhd.csv"), "-o", &sample]);
    let q_yes = p(dir.path(), "yes.json");
    let s = ok(&yes, &["screen", "--input", &sample, "--queue", &q_yes]);
    assert_eq!(s["screened"], 36, "controls are never screened");
    assert_eq!(s["auto_kept"], 36);
    assert_eq!(ReviewQueue::load(Path::new(&q_yes)).unwrap().items.len(), 0);

    let no = screening_config(dir.path(), 0.0);
    let q_no = p(dir.path(), "no.json");
    let s = ok(&no, &["screen", "--input", &sample, "--queue", &q_no]);
    assert_eq!(s["queued"], 36);
    let q = ReviewQueue::load(Path::new(&q_no)).unwrap();
    assert!(q
        .items
        .iter()
        .all(|i| i.decision == Decision::Pending && i.prediction == LabelState::Negative));
    let ds = load_dataset(Path::new(&sample)).unwrap();
    for post in ds.posts().iter().filter(|p| p.is_control) {
        assert!(!q.contains(&post.id));
    }

    // a second screen over the same sample has nothing left to ask
    let again = ok(&no, &["screen", "--input", &sample, "--queue", &q_no]);
    assert_eq!(again["screened"], 0);
    assert_eq!(again["provider_calls"], 0);
}

#[test]
fn finalize_requires_decisions_and_reports_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = screening_config(dir.path(), 0.0);
    let sample = p(dir.path(), "sample.jsonl");
    let queue = p(dir.path(), "queue.json");
    let clean = p(dir.path(), "clean.jsonl");
    ok(&cfg, &["sample", "--rmhd", &fixture("rmhd/rmhd.csv"), "-o", &sample]);
    ok(&cfg, &["screen", "--input", &sample, "--queue", &queue]);

    let err = run(&cfg, &["finalize", "--input", &sample, "--queue", &queue, "-o", &clean]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("queue not fully decided: 36 pending"), "{err}");

    // remove two ptsd posts: five are needed, four survive
    let mut q = ReviewQueue::load(Path::new(&queue)).unwrap();
    let ptsd: Vec<String> = q
        .items
        .iter()
        .filter(|i| i.origin_disorder.as_ref().is_some_and(|d| d.as_str() == "ptsd"))
        .map(|i| i.post_id.clone())
        .collect();
    for id in &ptsd[..2] {
        q.decide(id, Decision::Remove, None, None).unwrap();
    }
    q.auto_keep_all();
    q.save(Path::new(&queue)).unwrap();
    let err = run(&cfg, &["finalize", "--input", &sample, "--queue", &queue, "-o", &clean]).unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("ptsd 4 of 5 (short 1)") && msg.contains("--top-up"),
        "{msg}"
    );
    assert!(!Path::new(&clean).exists());

    // top up, screen the newcomers, decide them, finalize
    let topped = p(dir.path(), "sample2.jsonl");
    let s = ok(
        &cfg,
        &[
            "sample",
            "--rmhd",
            &fixture("rmhd/rmhd.csv"),
            "--top-up",
            &sample,
            "--count",
            "2",
            "--groups",
            "ptsd",
            "-o",
            &topped,
        ],
    );
    assert_eq!(s["posts"], 43);
    let s = ok(
        &cfg,
        &["screen", "--input", &topped, "--queue", &queue, "--auto-keep-all"],
    );
    assert_eq!(s["screened"], 2);
    let out = ok(&cfg, &["finalize", "--input", &topped, "--queue", &queue, "-o", &clean]);
    assert_eq!(out["posts"], 35);
    let ds = load_dataset(Path::new(&clean)).unwrap();
    for id in &ptsd[..2] {
        assert!(!ds.contains(id), "removed post survived");
    }

    // same seed, same final set
    let clean2 = p(dir.path(), "clean2.jsonl");
    ok(
        &cfg,
        &["finalize", "--input", &topped, "--queue", &queue, "-o", &clean2],
    );
    assert_eq!(std::fs::read(&clean).unwrap(), std::fs::read(&clean2).unwrap());
}

#[test]
fn build_keeps_origin_labels_and_stores_every_model() {
    let dir = tempfile::tempdir().unwrap();
    let outs = common::full_pipeline(dir.path());
    assert_eq!(outs[3]["posts"], 350);
    let ds = load_dataset(&dir.path().join("out/spaade.jsonl")).unwrap();
    for post in ds.posts() {
        let anns: Vec<_> = ["stub-a", "stub-b", "stub-c"]
            .iter()
            .map(|m| {
                ds.annotation(&post.id, m, PromptKind::SingleLabel)
                    .expect("annotation per model")
            })
            .collect();
        match &post.origin_disorder {
            Some(origin) => {
                assert_eq!(ds.truth(&post.id).unwrap().get(origin.as_str()), LabelState::Positive);
                assert_eq!(ds.truth_sources(&post.id).unwrap()[origin], LabelSource::Origin);
                for a in &anns {
                    assert_eq!(a.responses.len(), 5);
                    assert!(
                        a.responses.iter().all(|r| &r.disorders[0] != origin),
                        "origin cell was asked"
                    );
                }
            }
            None => assert!(anns.iter().all(|a| a.responses.len() == 6)),
        }
    }
    let dist: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/spaade.jsonl.distribution.json")).unwrap()).unwrap();
    for row in dist["rows"].as_array().unwrap() {
        for (_, c) in row["counts"].as_object().unwrap() {
            assert_eq!(c["positive"].as_u64().unwrap() + c["negative"].as_u64().unwrap(), 350);
        }
    }
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2e_config(dir.path());
    let base = p(dir.path(), "base.jsonl");
    ok(
        &cfg,
        &[
            "merge",
            "--dreaddit",
            &fixture("merge/dreaddit.csv"),
            "--depseverity",
            &fixture("merge/depseverity.csv"),
            "-o",
            &base,
        ],
    );
    let before: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    let out = p(dir.path(), "r.json");
    let v = run(
        &cfg,
        &[
            "--dry-run",
            "evaluate",
            "--input",
            &base,
            "--model",
            "stub-a",
            "-o",
            &out,
        ],
    )
    .unwrap();
    assert_eq!(v["dry_run"], true);
    assert_eq!(v["passes"][0]["prompts"], 388);
    assert_eq!(v["passes"][0]["cached"], 0);
    assert!(!Path::new(&out).exists());
    ok(&cfg, &["evaluate", "--input", &base, "--model", "stub-a", "-o", &out]);
    let v = run(
        &cfg,
        &[
            "--dry-run",
            "evaluate",
            "--input",
            &base,
            "--model",
            "stub-a",
            "-o",
            &out,
        ],
    )
    .unwrap();
    assert_eq!(v["passes"][0]["requests"], 0);
    let after: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(after.len() > before.len());
}

#[test]
fn unreachable_provider_exits_3_and_keeps_partial_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[[providers]]\nprovider = \"openai\"\nmodel_id = \"m\"\nbase_url = \"http://127.0.0.1:9\"\n\
         api_key_env = \"LABELFORGE_TEST_KEY\"\ntimeout_secs = 2\nrequests_per_minute = 1000000\n\
         retry = { max_attempts = 2, initial_backoff_ms = 1, max_backoff_ms = 2 }\n",
    )
    .unwrap();
    let base = p(dir.path(), "base.jsonl");
    ok(
        &cfg,
        &[
            "merge",
            "--dreaddit",
            &fixture("merge/dreaddit.csv"),
            "--depseverity",
            &fixture("merge/depseverity.csv"),
            "-o",
            &base,
        ],
    );
    let out = p(dir.path(), "annotated.jsonl");

    let err = run(
        &cfg,
        &["annotate", "--input", &base, "-o", &out, "--disorders", "depression"],
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 1, "missing key is a configuration error: {err}");

    let status = bin()
        .env("LABELFORGE_TEST_KEY", "k")
        .arg("--config")
        .arg(&cfg)
        .args(["annotate", "--input", &base, "-o", &out, "--disorders", "depression"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
    let v: Value =
        serde_json::from_slice(status.stderr.trim_ascii_end().rsplit(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(v["error"], "provider");
    assert_eq!(v["failed_posts"].as_array().unwrap().len(), 194);
    assert!(Path::new(&out).exists(), "partial dataset is saved");
}
