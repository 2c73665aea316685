//! Per-disorder, micro-aggregated and multi-class evaluation metrics.
//!
//! Zero denominators resolve to 0.0. Balanced accuracy averages recall over the
//! classes that have truth support only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::draw;
use crate::dataset::{Dataset, LabelsSource};
use crate::error::{MetricsError, SampleError};
use crate::labels::LabelVector;
use crate::parser::ParseStatus;
use crate::prompt::PromptKind;
use crate::registry::DisorderId;
use crate::vote::majority_vote;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: Self) -> Self {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub counts: ConfusionCounts,
    /// Cells skipped because either side was unknown.
    pub excluded: u64,
}

/// Binary tally for one disorder over posts present in both maps.
pub fn confusion(
    pred: &BTreeMap<String, LabelVector>,
    truth: &BTreeMap<String, LabelVector>,
    disorder: &str,
) -> Result<Tally, MetricsError> {
    let mut tally = Tally::default();
    let mut overlap = false;
    for (post, t) in truth {
        let Some(p) = pred.get(post) else { continue };
        overlap = true;
        match (p.get(disorder).definite(), t.get(disorder).definite()) {
            (Some(p), Some(t)) => tally.counts.record(p, t),
            _ => tally.excluded += 1,
        }
    }
    if !overlap {
        return Err(MetricsError::EmptyOverlap);
    }
    Ok(tally)
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fn_)
}

pub fn f1(c: &ConfusionCounts) -> f64 {
    f1_from(precision(c), recall(c))
}

pub fn f1_from(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Mean of the positive-class and negative-class recall, over classes with support.
pub fn balanced_accuracy(c: &ConfusionCounts) -> f64 {
    let mut recalls = Vec::with_capacity(2);
    if c.tp + c.fn_ > 0 {
        recalls.push(ratio(c.tp, c.tp + c.fn_));
    }
    if c.tn + c.fp > 0 {
        recalls.push(ratio(c.tn, c.tn + c.fp));
    }
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderMetrics {
    pub cba: f64,
    pub cf1: f64,
    pub cp: f64,
    pub cr: f64,
}

impl DisorderMetrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        DisorderMetrics {
            cba: balanced_accuracy(c),
            cf1: f1(c),
            cp: precision(c),
            cr: recall(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    pub oba: f64,
    pub of1: f64,
    pub op: f64,
    pub orc: f64,
    pub counts: ConfusionCounts,
}

/// Sums the per-disorder counts, then applies the binary formulas.
pub fn overall_micro(per_disorder: &[ConfusionCounts]) -> OverallMetrics {
    let counts: ConfusionCounts = per_disorder.iter().copied().sum();
    OverallMetrics {
        oba: balanced_accuracy(&counts),
        of1: f1(&counts),
        op: precision(&counts),
        orc: recall(&counts),
        counts,
    }
}

/// Fraction of mismatching cells between two equally shaped N x L matrices.
pub fn hamming_loss(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<f64, MetricsError> {
    let shape = |m: &[Vec<bool>]| (m.len(), m.first().map_or(0, Vec::len));
    let (ps, ts) = (shape(pred), shape(truth));
    let ragged = |m: &[Vec<bool>], l: usize| m.iter().any(|r| r.len() != l);
    if ps != ts || ragged(pred, ps.1) || ragged(truth, ts.1) {
        return Err(MetricsError::ShapeMismatch { pred: ps, truth: ts });
    }
    let cells = ps.0 * ps.1;
    if cells == 0 {
        return Err(MetricsError::EmptyOverlap);
    }
    let wrong = pred
        .iter()
        .zip(truth)
        .flat_map(|(p, t)| p.iter().zip(t))
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / cells as f64)
}

/// Power-set class id of a definite row: bit i set when disorder i is positive.
pub fn power_set_id(row: &[bool]) -> usize {
    row.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
}

/// Multi-class balanced accuracy over power-set classes, averaging recall over
/// the classes present in the truth.
pub fn multiclass_ba(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<f64, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::ShapeMismatch {
            pred: (pred.len(), pred.first().map_or(0, Vec::len)),
            truth: (truth.len(), truth.first().map_or(0, Vec::len)),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::EmptyOverlap);
    }
    // class id -> (support, correct)
    let mut per_class: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for (p, t) in pred.iter().zip(truth) {
        let tc = power_set_id(t);
        let e = per_class.entry(tc).or_default();
        e.0 += 1;
        if power_set_id(p) == tc {
            e.1 += 1;
        }
    }
    let sum: f64 = per_class.values().map(|&(s, c)| ratio(c, s)).sum();
    Ok(sum / per_class.len() as f64)
}

/// Which model output an evaluation scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSelection {
    Single { model_id: String },
    MajorityVote { model_ids: Vec<String> },
}

impl ModelSelection {
    pub fn label(&self) -> String {
        match self {
            ModelSelection::Single { model_id } => model_id.clone(),
            ModelSelection::MajorityVote { model_ids } => format!("vote({})", model_ids.join("+")),
        }
    }

    fn models(&self) -> Vec<&str> {
        match self {
            ModelSelection::Single { model_id } => vec![model_id.as_str()],
            ModelSelection::MajorityVote { model_ids } => model_ids.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model: String,
    pub prompt_kind: PromptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub failed_parse_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub disorders: Vec<DisorderId>,
    pub per_disorder: BTreeMap<DisorderId, DisorderMetrics>,
    pub per_disorder_counts: BTreeMap<DisorderId, ConfusionCounts>,
    pub overall: OverallMetrics,
    pub hamming_loss: f64,
    pub multiclass_ba: f64,
    pub posts: usize,
    pub responses: usize,
    pub parse_failures: usize,
    pub parse_failure_rate: f64,
    pub recovered: usize,
    pub recovery_rate: f64,
    pub excluded_cells: u64,
    pub run: RunMetadata,
}

pub const FAILED_PARSE_POLICY: &str = "failed parses scored as negative; tallied in parse_failures";

/// Scores the selected model output against truth for `disorders`.
pub fn evaluate(
    dataset: &Dataset,
    selection: &ModelSelection,
    kind: PromptKind,
    disorders: &[DisorderId],
) -> Result<MetricsReport, MetricsError> {
    let models = selection.models();
    for m in &models {
        if dataset.models(kind).iter().all(|x| x != m) {
            return Err(MetricsError::UnknownModel(m.to_string()));
        }
    }

    let mut missing: Vec<(String, String)> = Vec::new();
    let mut pred: BTreeMap<String, LabelVector> = BTreeMap::new();
    let mut truth: BTreeMap<String, LabelVector> = BTreeMap::new();
    let (mut responses, mut failures, mut recovered) = (0usize, 0usize, 0usize);

    for post in dataset.posts() {
        let Some(t) = dataset.truth(&post.id) else { continue };
        let mut votes = Vec::with_capacity(models.len());
        for m in &models {
            let source = LabelsSource::Model {
                model_id: m.to_string(),
                prompt_kind: kind,
            };
            let Some(labels) = dataset.labels(&post.id, &source) else {
                missing.extend(disorders.iter().map(|d| (post.id.clone(), d.to_string())));
                continue;
            };
            let ann = dataset.annotation(&post.id, m, kind).expect("labels imply annotation");
            responses += ann.responses.len();
            failures += ann.count_status(ParseStatus::Failed);
            recovered += ann.count_status(ParseStatus::AmbiguousRecovered);
            for d in disorders {
                if t.get(d.as_str()).is_definite() && !labels.get(d.as_str()).is_definite() {
                    missing.push((post.id.clone(), d.to_string()));
                }
            }
            votes.push(labels.project(disorders));
        }
        if votes.len() != models.len() {
            continue;
        }
        let p = if votes.len() == 1 {
            votes.pop().expect("one vote")
        } else {
            majority_vote(&votes)?
        };
        pred.insert(post.id.clone(), p);
        truth.insert(post.id.clone(), t.project(disorders));
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(MetricsError::MissingAnnotations(missing));
    }
    if pred.is_empty() {
        return Err(MetricsError::EmptyOverlap);
    }

    let mut per_disorder = BTreeMap::new();
    let mut per_counts = BTreeMap::new();
    let mut excluded = 0;
    for d in disorders {
        let tally = confusion(&pred, &truth, d.as_str())?;
        excluded += tally.excluded;
        per_disorder.insert(d.clone(), DisorderMetrics::from_counts(&tally.counts));
        per_counts.insert(d.clone(), tally.counts);
    }
    let counts: Vec<ConfusionCounts> = per_counts.values().copied().collect();
    let overall = overall_micro(&counts);

    // Hamming loss and multi-class BA need fully definite rows.
    let (mut pm, mut tm) = (Vec::new(), Vec::new());
    for (post, t) in &truth {
        let p = &pred[post];
        let row =
            |v: &LabelVector| -> Option<Vec<bool>> { disorders.iter().map(|d| v.get(d.as_str()).definite()).collect() };
        if let (Some(pr), Some(tr)) = (row(p), row(t)) {
            pm.push(pr);
            tm.push(tr);
        }
    }
    let (hl, mba) = if tm.is_empty() {
        (0.0, 0.0)
    } else {
        (hamming_loss(&pm, &tm)?, multiclass_ba(&pm, &tm)?)
    };

    Ok(MetricsReport {
        disorders: disorders.to_vec(),
        per_disorder,
        per_disorder_counts: per_counts,
        overall,
        hamming_loss: hl,
        multiclass_ba: mba,
        posts: pred.len(),
        responses,
        parse_failures: failures,
        parse_failure_rate: ratio(failures as u64, responses as u64),
        recovered,
        recovery_rate: ratio(recovered as u64, responses as u64),
        excluded_cells: excluded,
        run: RunMetadata {
            model: selection.label(),
            prompt_kind: kind,
            seed: dataset.meta.seed,
            failed_parse_policy: FAILED_PARSE_POLICY.into(),
        },
    })
}

/// Table column names in order for `disorders`.
pub fn report_columns(disorders: &[DisorderId]) -> Vec<String> {
    let mut cols = Vec::new();
    for d in disorders {
        for m in ["CBA", "CF1", "CP", "CR"] {
            cols.push(format!("{d}.{m}"));
        }
    }
    for c in ["GBA", "OF1", "OP", "OR", "HL", "BA"] {
        cols.push(c.to_string());
    }
    cols
}

fn row_values(r: &MetricsReport) -> Vec<f64> {
    let mut v = Vec::new();
    for d in &r.disorders {
        let m = &r.per_disorder[d];
        v.extend([m.cba, m.cf1, m.cp, m.cr]);
    }
    v.extend([
        r.overall.oba,
        r.overall.of1,
        r.overall.op,
        r.overall.orc,
        r.hamming_loss,
        r.multiclass_ba,
    ]);
    v
}

/// Aligned-text table, one row per report (model x prompt).
pub fn render_table(reports: &[MetricsReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut header = vec!["Model".to_string(), "Prompt".to_string()];
    header.extend(report_columns(&first.disorders));
    header.extend(["Fail".to_string(), "Recov".to_string()]);
    let mut rows: Vec<Vec<String>> = vec![header];
    for r in reports {
        let mut row = vec![r.run.model.clone(), r.run.prompt_kind.to_string()];
        row.extend(row_values(r).into_iter().map(|x| format!("{x:.2}")));
        row.push(format!("{:.3}", r.parse_failure_rate));
        row.push(format!("{:.3}", r.recovery_rate));
        rows.push(row);
    }
    let ncol = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < 2 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (ncol - 1)));
        }
    }
    out
}

/// Equal numbers of posts per power-set class of the truth over `disorders`,
/// sized to the smallest class. Posts with unknown truth cells are ignored.
pub fn balanced_subset(dataset: &Dataset, disorders: &[DisorderId], seed: u64) -> Result<Dataset, SampleError> {
    let mut classes: BTreeMap<usize, Vec<&str>> = (0..1usize << disorders.len()).map(|c| (c, Vec::new())).collect();
    for p in dataset.posts() {
        let Some(t) = dataset.truth(&p.id) else { continue };
        let row: Option<Vec<bool>> = disorders.iter().map(|d| t.get(d.as_str()).definite()).collect();
        if let Some(row) = row {
            classes.get_mut(&power_set_id(&row)).expect("class exists").push(&p.id);
        }
    }
    if let Some((c, _)) = classes.iter().find(|(_, v)| v.is_empty()) {
        return Err(SampleError::EmptyClass(class_name(*c, disorders)));
    }
    let size = classes.values().map(Vec::len).min().unwrap_or(0);
    let mut ids: Vec<String> = Vec::new();
    for (c, cands) in &classes {
        ids.extend(draw(cands, size, seed, &class_name(*c, disorders))?);
    }
    let mut out = dataset.subset(ids.iter().map(String::as_str));
    out.meta.seed = Some(seed);
    out.meta.params.insert(
        "balanced_subset".into(),
        serde_json::json!({ "per_class": size, "classes": classes.len(), "seed": seed }),
    );
    Ok(out)
}

fn class_name(class: usize, disorders: &[DisorderId]) -> String {
    let members: Vec<&str> = disorders
        .iter()
        .enumerate()
        .filter(|(i, _)| class & (1 << i) != 0)
        .map(|(_, d)| d.as_str())
        .collect();
    if members.is_empty() {
        "normal".into()
    } else {
        members.join("+")
    }
}

/// Rows of definite labels as boolean matrices (helper for callers holding vectors).
pub fn to_matrix(vectors: &[LabelVector], disorders: &[DisorderId]) -> Option<Vec<Vec<bool>>> {
    vectors
        .iter()
        .map(|v| disorders.iter().map(|d| v.get(d.as_str()).definite()).collect())
        .collect()
}
