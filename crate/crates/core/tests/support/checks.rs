//! Checks shared by the core test suite and the acceptance runner. Each returns
//! a short summary on success and the list of problems on failure.

#![allow(dead_code)]

use std::path::Path;

use labelforge_core::parser::{parse_multiclass, parse_multilabel, parse_single, parse_unrestricted};
use labelforge_core::prompt::{self, sha256_hex, Slot};
use labelforge_core::{DisorderId, LabelState, ParseOutcome, ParseStatus, PromptKind, Registry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// sha256 of each template file. Editing a template means updating this table on purpose.
pub const TEMPLATE_HASHES: [(PromptKind, &str); 4] = [
    (
        PromptKind::SingleLabel,
        "f0206e0f53378f72729f2cfb0be0687a599ae9be0f1d771c79abe6bad3ee64d7",
    ),
    (
        PromptKind::MultiLabel1,
        "bbb551f85368440588e5e86d9ee16dd8afe6a78c082a1b042a4c57ccf97cbc04",
    ),
    (
        PromptKind::MultiLabel2,
        "3e84bd13a42226896456571965acb175931ecd3b3003e8b8094a3da1f2839552",
    ),
    (
        PromptKind::Unrestricted,
        "bb7208c43e34e0fbac260ccf846006671cf740be7e8f2f74d30ddad91c7bd61f",
    ),
];

fn ids(xs: &[&str]) -> Vec<DisorderId> {
    xs.iter().map(|s| DisorderId::new(*s)).collect()
}

fn finish(problems: Vec<String>, ok: String) -> Result<String, String> {
    if problems.is_empty() {
        Ok(ok)
    } else {
        Err(problems.join("; "))
    }
}

/// Renders every prompt kind for the golden inputs under `root`/fixtures/golden,
/// compares against the checked-in rendering, then re-blanks and matches both
/// the template file on disk and the frozen hash.
pub fn check_templates(root: &Path) -> Result<String, String> {
    let reg = Registry::builtin();
    let golden = root.join("fixtures/golden");
    let post = std::fs::read_to_string(golden.join("post.txt")).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    for (kind, frozen) in TEMPLATE_HASHES {
        let rendered = match kind {
            PromptKind::SingleLabel => prompt::render_single(&reg, "ptsd", "g", &post),
            PromptKind::MultiLabel1 => prompt::render_multilabel_1(&reg, &["stress", "depression"], "g", &post),
            PromptKind::MultiLabel2 => prompt::render_multilabel_2(&reg, &["depression", "stress"], "g", &post),
            PromptKind::Unrestricted => prompt::render_unrestricted("g", &post),
        }
        .map_err(|e| format!("{kind}: {e}"))?;
        let expected =
            std::fs::read_to_string(golden.join(format!("{kind}.rendered.txt"))).map_err(|e| e.to_string())?;
        if rendered.text != expected {
            problems.push(format!("{kind}: rendering differs from golden file"));
        }
        if rendered.post_text().as_deref() != Some(post.as_str()) {
            problems.push(format!("{kind}: post text not recoverable"));
        }
        let on_disk = std::fs::read(root.join(format!("templates/{kind}.txt"))).map_err(|e| e.to_string())?;
        let disk_hash = sha256_hex(&on_disk);
        match rendered.reblank() {
            Some(blank) => {
                let h = sha256_hex(blank.as_bytes());
                if h != disk_hash {
                    problems.push(format!("{kind}: re-blanked rendering does not match the template file"));
                }
                if h != frozen {
                    problems.push(format!("{kind}: re-blanked hash {h} differs from frozen {frozen}"));
                }
            }
            None => problems.push(format!("{kind}: rendering does not re-blank")),
        }
        if rendered.template_hash != frozen {
            problems.push(format!("{kind}: embedded template hash changed"));
        }
    }
    finish(problems, "4 templates byte-exact".into())
}

#[derive(Debug, Deserialize)]
struct Case {
    kind: PromptKind,
    disorders: Vec<DisorderId>,
    response: String,
    status: ParseStatus,
    #[serde(default)]
    positives: Option<Vec<DisorderId>>,
    #[serde(default)]
    unknown_tokens: Vec<String>,
}

pub fn parse(reg: &Registry, kind: PromptKind, disorders: &[DisorderId], raw: &str) -> ParseOutcome {
    match kind {
        PromptKind::SingleLabel => parse_single(raw, &disorders[0]),
        PromptKind::MultiLabel1 => parse_multiclass(raw, reg, disorders),
        PromptKind::MultiLabel2 => parse_multilabel(raw, reg, disorders),
        PromptKind::Unrestricted => parse_unrestricted(raw, reg),
    }
}

/// Every case in the labelled response corpus parses to its expected status,
/// label vector and unknown tokens.
pub fn check_parser_corpus(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cases: Vec<Case> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let reg = Registry::builtin();
    let mut problems = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let out = parse(&reg, c.kind, &c.disorders, &c.response);
        let tag = format!("case {i} ({} {:?})", c.kind, c.response);
        if out.status != c.status {
            problems.push(format!("{tag}: status {:?}, expected {:?}", out.status, c.status));
            continue;
        }
        let scope: Vec<DisorderId> = if c.kind == PromptKind::Unrestricted {
            reg.ids().cloned().collect()
        } else {
            c.disorders.clone()
        };
        match (&c.positives, &out.labels) {
            (None, None) => {}
            (Some(pos), Some(labels)) => {
                let want: labelforge_core::LabelVector = scope
                    .iter()
                    .map(|d| (d.clone(), LabelState::from_bool(pos.contains(d))))
                    .collect();
                if *labels != want {
                    problems.push(format!("{tag}: labels {labels:?}"));
                }
            }
            _ => problems.push(format!("{tag}: labels presence mismatch")),
        }
        if out.unknown_tokens != c.unknown_tokens {
            problems.push(format!("{tag}: unknown tokens {:?}", out.unknown_tokens));
        }
    }
    finish(problems, format!("{} corpus cases", cases.len()))
}

const ALPHABET: &[&str] = &[
    "yes",
    "no",
    "Yes",
    "NO",
    "normal",
    "Normal",
    "depressed",
    "Stressed",
    "anxious",
    "ADHD",
    "PTSD",
    "and",
    ",",
    ";",
    "/",
    " ",
    "  ",
    "\n",
    "\t",
    ".",
    "!",
    "\"",
    "'",
    "*",
    "(",
    ")",
    "[",
    "]",
    "{",
    "}",
    "\u{201c}",
    "\u{2019}",
    "é",
    "ß",
    "日本",
    "🙂",
    "\u{0}",
    "\u{200b}",
    "disorder",
    "depression",
    "eating disorders",
    "x",
    "-",
    "_",
];

fn arbitrary(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(0..24);
    let mut s = String::new();
    for _ in 0..len {
        if rng.random_bool(0.2) {
            s.push(char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?'));
        } else {
            s.push_str(ALPHABET[rng.random_range(0..ALPHABET.len())]);
        }
    }
    s
}

/// Structural promises every parse outcome keeps.
pub fn outcome_problem(
    reg: &Registry,
    kind: PromptKind,
    disorders: &[DisorderId],
    out: &ParseOutcome,
) -> Option<String> {
    match (out.status, &out.labels) {
        (ParseStatus::Failed, Some(_)) => return Some("failed parse carries labels".into()),
        (ParseStatus::Failed, None) => return None,
        (_, None) => return Some("successful parse without labels".into()),
        (_, Some(_)) => {}
    }
    let labels = out.labels.as_ref().expect("checked");
    let scope: Vec<DisorderId> = match kind {
        PromptKind::Unrestricted => reg.ids().cloned().collect(),
        PromptKind::SingleLabel => disorders[..1].to_vec(),
        _ => disorders.to_vec(),
    };
    if labels.len() != scope.len() || !labels.covers(&scope) {
        return Some(format!("labels {labels:?} do not cover {scope:?}"));
    }
    if labels.iter().any(|(_, s)| !s.is_definite()) {
        return Some("indefinite label".into());
    }
    None
}

/// Feeds `n` generated strings to every parser; none may panic or break the
/// outcome invariants.
pub fn fuzz_parsers(n: usize, seed: u64) -> Result<String, String> {
    let reg = Registry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scopes = [
        ids(&["ptsd"]),
        ids(&["depression", "stress"]),
        ids(&["anxiety", "adhd", "suicide"]),
    ];
    let mut problems = Vec::new();
    for i in 0..n {
        let raw = arbitrary(&mut rng);
        let kind = PromptKind::ALL[i % 4];
        let scope = &scopes[i % 3];
        let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| parse(&reg, kind, scope, &raw)));
        match out {
            Err(_) => problems.push(format!("{kind} panicked on {raw:?}")),
            Ok(o) => {
                if let Some(p) = outcome_problem(&reg, kind, scope, &o) {
                    problems.push(format!("{kind} on {raw:?}: {p}"));
                }
            }
        }
        if problems.len() > 5 {
            break;
        }
    }
    finish(problems, format!("{n} fuzzed responses"))
}

/// Every class string the multi-class prompt lists, for 2..=6 disorders, parses
/// back to exactly its own label vector.
pub fn power_set_round_trip() -> Result<String, String> {
    let reg = Registry::builtin();
    let all: Vec<DisorderId> = reg.ids().cloned().collect();
    let mut problems = Vec::new();
    let mut cases = 0;
    for n in 2..=6 {
        let scope = &all[..n];
        let p = prompt::render_multilabel_1(&reg, scope, "ps", "some post").map_err(|e| e.to_string())?;
        let slots = PromptKind::MultiLabel1
            .template()
            .extract(&p.text)
            .ok_or("prompt does not extract")?;
        let list = slots
            .iter()
            .find(|(s, _)| *s == Slot::ClassList)
            .map(|(_, v)| v.clone())
            .ok_or("no class list")?;
        let classes: Vec<&str> = list.split(", ").map(|c| c.trim_matches('"')).collect();
        if classes.len() != 1 << n {
            problems.push(format!("n={n}: {} classes listed", classes.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for class in classes {
            cases += 1;
            let out = parse_multiclass(class, &reg, scope);
            let Some(labels) = out.labels.filter(|_| out.status == ParseStatus::Ok) else {
                problems.push(format!("n={n}: {class:?} -> {:?}", out.status));
                continue;
            };
            // the class string names exactly the positive adjectives
            let named: Vec<&str> = if class == "Normal" {
                vec![]
            } else {
                class.split(" and ").collect()
            };
            for d in scope {
                let adj = reg.get(d.as_str()).expect("registered").adjective.as_str();
                if labels.get(d.as_str()) != LabelState::from_bool(named.contains(&adj)) {
                    problems.push(format!("n={n}: {class:?} wrong for {d}"));
                }
            }
            let row: Vec<bool> = scope
                .iter()
                .map(|d| labels.get(d.as_str()) == LabelState::Positive)
                .collect();
            if !seen.insert(row) {
                problems.push(format!("n={n}: {class:?} duplicates another class"));
            }
        }
    }
    if cases != 124 {
        problems.push(format!("{cases} cases, expected 124"));
    }
    finish(problems, format!("{cases} classes round-trip"))
}

pub const DEP_STRESS_CELLS: [(&str, u64); 4] = [
    ("depression+ stress+", 814),
    ("depression+ stress-", 154),
    ("depression- stress+", 1041),
    ("depression- stress-", 1532),
];

fn merged_cells(dreaddit: &Path, depseverity: &Path) -> Result<(serde_json::Value, [u64; 4]), String> {
    use labelforge_core::analysis::contingency;
    use labelforge_core::corpus::*;
    use labelforge_core::LabelsSource;
    let d = load_dreaddit(dreaddit, &DreadditColumns::default()).map_err(|e| e.to_string())?;
    let s = load_depseverity(depseverity, &DepSeverityColumns::default()).map_err(|e| e.to_string())?;
    let out = merge_depseverity_dreaddit(&d.records, &s.records, 0.0).map_err(|e| e.to_string())?;
    let t = contingency(&out.dataset, &LabelsSource::Truth, "depression", "stress").map_err(|e| e.to_string())?;
    let stats = serde_json::json!({
        "posts": out.dataset.len(),
        "matched_by_row_id": out.report.matched_by_row_id,
        "matched_by_text": out.report.matched_by_text,
        "dreaddit_unique": out.report.dreaddit_unique,
        "depseverity_unique": out.report.depseverity_unique,
        "skipped_dreaddit_rows": d.skipped.len(),
        "cells": {
            "depression+ stress+": t.a,
            "depression+ stress-": t.b,
            "depression- stress+": t.c,
            "depression- stress-": t.d,
        },
    });
    Ok((stats, [t.a, t.b, t.c, t.d]))
}

/// With LABELFORGE_DREADDIT and LABELFORGE_DEPSEVERITY pointing at the official
/// files, every merged cell must land within 1% of the reference counts.
/// Otherwise the synthetic fixture must reproduce its expected statistics exactly.
pub fn check_merge(root: &Path) -> Result<String, String> {
    if let (Ok(d), Ok(s)) = (
        std::env::var("LABELFORGE_DREADDIT"),
        std::env::var("LABELFORGE_DEPSEVERITY"),
    ) {
        let (_, cells) = merged_cells(Path::new(&d), Path::new(&s))?;
        let mut problems = Vec::new();
        for ((name, want), got) in DEP_STRESS_CELLS.iter().zip(cells) {
            let err = (got as f64 - *want as f64).abs() / *want as f64;
            if err > 0.01 {
                problems.push(format!("{name}: {got} vs {want} ({:.2}% off)", err * 100.0));
            }
        }
        return finish(problems, format!("official corpora: cells {cells:?}"));
    }
    let dir = root.join("fixtures/merge");
    let (stats, _) = merged_cells(&dir.join("dreaddit.csv"), &dir.join("depseverity.csv"))?;
    let text = std::fs::read_to_string(dir.join("expected.json")).map_err(|e| e.to_string())?;
    let expected: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if stats == expected {
        Ok("official files absent (set LABELFORGE_DREADDIT and LABELFORGE_DEPSEVERITY); skipped, synthetic fixture matched exactly".into())
    } else {
        Err(format!("fixture merge gave {stats}, expected {expected}"))
    }
}
