//! Slow, direct re-derivation of the evaluation metrics from boolean matrices.
//! Shares no code with the library's metric module.

#![allow(dead_code)]

use std::collections::HashMap;

use labelforge_core::dataset::{Annotation, CorpusTag, Dataset, DatasetMeta, Post};
use labelforge_core::{DisorderId, LabelSource, LabelState, LabelVector, PromptKind};

#[derive(Debug, Clone)]
pub struct Expected {
    /// (balanced accuracy, f1, precision, recall) per column.
    pub per_label: Vec<[f64; 4]>,
    pub overall: [f64; 4],
    pub hamming: f64,
    pub multiclass_ba: f64,
}

fn safe_div(n: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        n / d
    }
}

/// Scores a flat list of (pred, truth) pairs.
fn binary(pairs: &[(bool, bool)]) -> [f64; 4] {
    let count = |p: bool, t: bool| pairs.iter().filter(|&&x| x == (p, t)).count() as f64;
    let (tp, fp, fneg) = (count(true, true), count(true, false), count(false, true));
    let precision = safe_div(tp, tp + fp);
    let recall = safe_div(tp, tp + fneg);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    // recall of each truth class that actually occurs
    let mut class_recalls = Vec::new();
    for class in [true, false] {
        let support: Vec<&(bool, bool)> = pairs.iter().filter(|x| x.1 == class).collect();
        if !support.is_empty() {
            let hit = support.iter().filter(|x| x.0 == class).count();
            class_recalls.push(hit as f64 / support.len() as f64);
        }
    }
    let ba = if class_recalls.is_empty() {
        0.0
    } else {
        class_recalls.iter().sum::<f64>() / class_recalls.len() as f64
    };
    [ba, f1, precision, recall]
}

pub fn expected(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Expected {
    let n = truth.len();
    let l = truth[0].len();
    let column = |j: usize| -> Vec<(bool, bool)> { (0..n).map(|i| (pred[i][j], truth[i][j])).collect() };
    let per_label = (0..l).map(|j| binary(&column(j))).collect();
    let all: Vec<(bool, bool)> = (0..l).flat_map(column).collect();
    let overall = binary(&all);

    let matches = all.iter().filter(|(p, t)| p == t).count();
    let hamming = 1.0 - matches as f64 / all.len() as f64;

    let mut groups: HashMap<&Vec<bool>, (usize, usize)> = HashMap::new();
    for i in 0..n {
        let g = groups.entry(&truth[i]).or_default();
        g.0 += 1;
        if pred[i] == truth[i] {
            g.1 += 1;
        }
    }
    let multiclass_ba = groups.values().map(|&(s, c)| c as f64 / s as f64).sum::<f64>() / groups.len() as f64;

    Expected {
        per_label,
        overall,
        hamming,
        multiclass_ba,
    }
}

pub fn column_ids(l: usize) -> Vec<DisorderId> {
    [
        "depression",
        "stress",
        "anxiety",
        "adhd",
        "eating_disorder",
        "ptsd",
        "suicide",
    ][..l]
        .iter()
        .map(|s| DisorderId::new(*s))
        .collect()
}

pub fn vector(ids: &[DisorderId], row: &[bool]) -> LabelVector {
    ids.iter()
        .zip(row)
        .map(|(d, &b)| (d.clone(), LabelState::from_bool(b)))
        .collect()
}

/// A dataset whose truth is `truth` and whose `model` annotations are `pred`.
pub fn dataset(model: &str, pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Dataset {
    let ids = column_ids(truth[0].len());
    let mut ds = Dataset::new(DatasetMeta::default());
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        let id = format!("p{i:04}");
        ds.push_post(Post::new(&id, format!("post {i}"), CorpusTag::Rmhd))
            .unwrap();
        for (d, &b) in ids.iter().zip(t) {
            ds.set_truth(&id, d.clone(), LabelState::from_bool(b), LabelSource::Corpus)
                .unwrap();
        }
        ds.insert_annotation(Annotation {
            post_id: id,
            model_id: model.into(),
            prompt_kind: PromptKind::MultiLabel2,
            responses: Vec::new(),
            labels: vector(&ids, p),
        })
        .unwrap();
    }
    ds
}

/// Largest absolute difference between the report and the oracle.
pub fn max_error(report: &labelforge_core::metrics::MetricsReport, exp: &Expected) -> f64 {
    let mut worst: f64 = 0.0;
    let mut diff = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for (d, e) in report.disorders.iter().zip(&exp.per_label) {
        let m = &report.per_disorder[d];
        for (a, b) in [m.cba, m.cf1, m.cp, m.cr].into_iter().zip(e) {
            diff(a, *b);
        }
    }
    let o = &report.overall;
    for (a, b) in [o.oba, o.of1, o.op, o.orc].into_iter().zip(&exp.overall) {
        diff(a, *b);
    }
    diff(report.hamming_loss, exp.hamming);
    diff(report.multiclass_ba, exp.multiclass_ba);
    worst
}
