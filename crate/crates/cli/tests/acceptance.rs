//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#[path = "../../core/tests/support/checks.rs"]
mod checks;
mod common;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use labelforge_core::analysis::{conditional_proportions, odds_ratio, ContingencyTable};
use labelforge_core::dataset::{CorpusTag, Dataset, DatasetMeta, Post};
use labelforge_core::metrics::{balanced_subset, evaluate, power_set_id, ModelSelection};
use labelforge_core::{DisorderId, LabelSource, LabelState, PromptKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'a str, Box<dyn Fn() -> Check + 'a>);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn within(limit: Duration, started: Instant, ok: String) -> Check {
    let took = started.elapsed();
    if took > limit {
        Err(format!("{ok}, but took {took:.2?} (limit {limit:?})"))
    } else {
        Ok(format!("{ok} in {took:.2?}"))
    }
}

fn metric_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let l = rng.random_range(1..=6);
        let density = rng.random_range(0.05..0.95);
        let mut m = || -> Vec<Vec<bool>> {
            (0..n)
                .map(|_| (0..l).map(|_| rng.random_bool(density)).collect())
                .collect()
        };
        let (pred, truth) = (m(), m());
        let ds = oracle::dataset("m", &pred, &truth);
        let sel = ModelSelection::Single { model_id: "m".into() };
        let report = evaluate(&ds, &sel, PromptKind::MultiLabel2, &oracle::column_ids(l)).map_err(|e| e.to_string())?;
        worst = worst.max(oracle::max_error(&report, &oracle::expected(&pred, &truth)));
    }
    if worst > 1e-12 {
        return Err(format!("max deviation {worst:e}"));
    }
    within(
        Duration::from_secs(10),
        started,
        format!("1000 instances, max deviation {worst:e}"),
    )
}

fn dep_stress_arithmetic() -> Check {
    let t = ContingencyTable::from_counts("depression", "stress", 814, 154, 1041, 1532);
    let or = odds_ratio(&t).value;
    let p = conditional_proportions(&t)
        .pos_given_pos
        .ok_or("no depression-positive posts")?;
    let msg = format!("OR {or:.4}, P(stress+|depression+) {p:.4}");
    if (or - 7.78).abs() <= 0.01 && (p - 0.841).abs() <= 0.001 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn end_to_end() -> Check {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut slowest = Duration::ZERO;
    for dir in &runs {
        let started = Instant::now();
        common::full_pipeline(dir.path());
        slowest = slowest.max(started.elapsed());
    }
    let (a, b) = (common::artifacts(runs[0].path()), common::artifacts(runs[1].path()));
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    if a.len() != b.len() || !differing.is_empty() {
        return Err(format!("runs differ: {differing:?}"));
    }

    // warm rerun: outputs removed, cache kept
    let dir = runs[0].path();
    let cache = dir.join("cache/responses.jsonl");
    let cache_before = std::fs::read(&cache).map_err(|e| e.to_string())?;
    std::fs::remove_dir_all(dir.join("out")).map_err(|e| e.to_string())?;
    common::full_pipeline(dir);
    let mut calls = 0;
    for (name, bytes) in common::artifacts(dir) {
        if name.ends_with(".run.json") {
            let v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            calls += v["provider_calls"].as_u64().unwrap_or(0);
        }
    }
    let cache_after = std::fs::read(&cache).map_err(|e| e.to_string())?;
    if calls != 0 || cache_after != cache_before {
        return Err(format!("warm rerun made {calls} provider calls"));
    }
    if slowest > Duration::from_secs(60) {
        return Err(format!("slowest cold run took {slowest:.2?}"));
    }
    Ok(format!(
        "{} artifacts byte-identical across two runs, warm rerun made 0 provider calls, slowest run {slowest:.2?}",
        a.len()
    ))
}

fn balanced_subset_arithmetic() -> Check {
    let dep = DisorderId::new("depression");
    let stress = DisorderId::new("stress");
    let mut ds = Dataset::new(DatasetMeta::default());
    let mut i = 0;
    for (d, s, count) in [
        (true, true, 814),
        (true, false, 154),
        (false, true, 1041),
        (false, false, 1532),
    ] {
        for _ in 0..count {
            let id = format!("t{i}");
            i += 1;
            ds.push_post(Post::new(&id, format!("post {id}"), CorpusTag::Merged))
                .unwrap();
            ds.set_truth(&id, dep.clone(), LabelState::from_bool(d), LabelSource::Corpus)
                .unwrap();
            ds.set_truth(&id, stress.clone(), LabelState::from_bool(s), LabelSource::Corpus)
                .unwrap();
        }
    }
    let ids = [dep, stress];
    let sub = balanced_subset(&ds, &ids, 7).map_err(|e| e.to_string())?;
    let mut per_class = [0usize; 4];
    for p in sub.posts() {
        let t = sub.truth(&p.id).ok_or("missing truth")?;
        let row: Vec<bool> = ids.iter().map(|d| t.get(d.as_str()) == LabelState::Positive).collect();
        per_class[power_set_id(&row)] += 1;
    }
    let msg = format!("{} posts, per class {per_class:?}", sub.len());
    if sub.len() == 616 && per_class == [154; 4] {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let root = root();
    let criteria: Vec<Criterion> = vec![
        ("metric oracle", Box::new(metric_oracle)),
        (
            "contingency arithmetic on the depression/stress corpus counts",
            Box::new(dep_stress_arithmetic),
        ),
        ("merge reproduction", Box::new(|| checks::check_merge(&root))),
        ("template byte-exactness", Box::new(|| checks::check_templates(&root))),
        (
            "parser corpus and fuzzing",
            Box::new(|| {
                let corpus = checks::check_parser_corpus(&root.join("fixtures/parser-corpus.json"))?;
                let fuzz = checks::fuzz_parsers(10_000, 99)?;
                Ok(format!("{corpus}, {fuzz}"))
            }),
        ),
        ("power-set round trip", Box::new(checks::power_set_round_trip)),
        ("end-to-end determinism", Box::new(end_to_end)),
        ("balanced subset arithmetic", Box::new(balanced_subset_arithmetic)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
