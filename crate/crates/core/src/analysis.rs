//! Disorder co-occurrence: contingency tables, row-conditional proportions,
//! odds ratios and per-source label distributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabelsSource};
use crate::error::AnalysisError;
use crate::registry::DisorderId;

/// 2x2 table for disorders A (rows) and B (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub disorder_a: DisorderId,
    pub disorder_b: DisorderId,
    /// A+ B+
    pub a: u64,
    /// A+ B-
    pub b: u64,
    /// A- B+
    pub c: u64,
    /// A- B-
    pub d: u64,
}

impl ContingencyTable {
    pub fn from_counts(disorder_a: &str, disorder_b: &str, a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable {
            disorder_a: disorder_a.into(),
            disorder_b: disorder_b.into(),
            a,
            b,
            c,
            d,
        }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn transposed(&self) -> Self {
        ContingencyTable {
            disorder_a: self.disorder_b.clone(),
            disorder_b: self.disorder_a.clone(),
            a: self.a,
            b: self.c,
            c: self.b,
            d: self.d,
        }
    }
}

pub fn contingency(
    dataset: &Dataset,
    source: &LabelsSource,
    a: &str,
    b: &str,
) -> Result<ContingencyTable, AnalysisError> {
    if a == b {
        return Err(AnalysisError::SameDisorder(a.to_string()));
    }
    let mut t = ContingencyTable::from_counts(a, b, 0, 0, 0, 0);
    for post in dataset.posts() {
        let Some(labels) = dataset.labels(&post.id, source) else {
            continue;
        };
        match (labels.get(a).definite(), labels.get(b).definite()) {
            (Some(true), Some(true)) => t.a += 1,
            (Some(true), Some(false)) => t.b += 1,
            (Some(false), Some(true)) => t.c += 1,
            (Some(false), Some(false)) => t.d += 1,
            _ => {}
        }
    }
    if t.total() == 0 {
        return Err(AnalysisError::NoEligiblePosts {
            a: a.to_string(),
            b: b.to_string(),
        });
    }
    Ok(t)
}

/// P(B = +/- | A = +/-). A side with no posts leaves its two entries undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProportions {
    pub pos_given_pos: Option<f64>,
    pub neg_given_pos: Option<f64>,
    pub pos_given_neg: Option<f64>,
    pub neg_given_neg: Option<f64>,
}

pub fn conditional_proportions(t: &ContingencyTable) -> ConditionalProportions {
    let split = |x: u64, y: u64| {
        let n = x + y;
        if n == 0 {
            (None, None)
        } else {
            (Some(x as f64 / n as f64), Some(y as f64 / n as f64))
        }
    };
    let (pp, np) = split(t.a, t.b);
    let (pn, nn) = split(t.c, t.d);
    ConditionalProportions {
        pos_given_pos: pp,
        neg_given_pos: np,
        pos_given_neg: pn,
        neg_given_neg: nn,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatio {
    pub value: f64,
    /// True when a zero cell forced the +0.5 correction on all four cells.
    pub corrected: bool,
}

/// (a*d)/(b*c); when any cell is zero, 0.5 is added to every cell first.
pub fn odds_ratio(t: &ContingencyTable) -> OddsRatio {
    let corrected = [t.a, t.b, t.c, t.d].contains(&0);
    let shift = if corrected { 0.5 } else { 0.0 };
    let (a, b, c, d) = (
        t.a as f64 + shift,
        t.b as f64 + shift,
        t.c as f64 + shift,
        t.d as f64 + shift,
    );
    OddsRatio {
        value: (a * d) / (b * c),
        corrected,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub disorder_a: DisorderId,
    pub disorder_b: DisorderId,
    pub table: ContingencyTable,
    pub proportions: ConditionalProportions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOddsRatio {
    pub disorder_a: DisorderId,
    pub disorder_b: DisorderId,
    pub table: ContingencyTable,
    pub odds_ratio: OddsRatio,
}

/// Heatmap-ready export of pairwise co-occurrence statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComorbidityMatrix {
    pub source: LabelsSource,
    pub disorders: Vec<DisorderId>,
    /// Every ordered pair (A, B), A != B.
    pub conditional: Vec<ConditionalRow>,
    /// Every unordered pair, A before B in the given order.
    pub odds_ratios: Vec<PairOddsRatio>,
    /// Symmetric OR grid indexed like `disorders`; diagonal is null.
    pub or_matrix: Vec<Vec<Option<f64>>>,
}

impl ComorbidityMatrix {
    pub fn odds_ratio(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.disorders.iter().position(|d| d.as_str() == a)?;
        let j = self.disorders.iter().position(|d| d.as_str() == b)?;
        self.or_matrix[i][j]
    }
}

pub fn comorbidity_matrix(
    dataset: &Dataset,
    source: &LabelsSource,
    disorders: &[DisorderId],
) -> Result<ComorbidityMatrix, AnalysisError> {
    if disorders.len() < 2 {
        return Err(AnalysisError::TooFewDisorders);
    }
    let n = disorders.len();
    let mut conditional = Vec::with_capacity(n * (n - 1));
    let mut odds = Vec::with_capacity(n * (n - 1) / 2);
    let mut grid = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = contingency(dataset, source, disorders[i].as_str(), disorders[j].as_str())?;
            if i < j {
                let or = odds_ratio(&t);
                grid[i][j] = Some(or.value);
                grid[j][i] = Some(or.value);
                odds.push(PairOddsRatio {
                    disorder_a: disorders[i].clone(),
                    disorder_b: disorders[j].clone(),
                    table: t.clone(),
                    odds_ratio: or,
                });
            }
            conditional.push(ConditionalRow {
                disorder_a: disorders[i].clone(),
                disorder_b: disorders[j].clone(),
                proportions: conditional_proportions(&t),
                table: t,
            });
        }
    }
    Ok(ComorbidityMatrix {
        source: source.clone(),
        disorders: disorders.to_vec(),
        conditional,
        odds_ratios: odds,
        or_matrix: grid,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosNeg {
    pub positive: u64,
    pub negative: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub source: String,
    pub counts: BTreeMap<DisorderId, PosNeg>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub disorders: Vec<DisorderId>,
    pub rows: Vec<DistributionRow>,
}

/// Positive/negative counts per disorder, one row per named labels source.
pub fn label_distribution(
    dataset: &Dataset,
    sources: &[(String, LabelsSource)],
    disorders: &[DisorderId],
) -> LabelDistribution {
    let rows = sources
        .iter()
        .map(|(name, src)| {
            let mut counts: BTreeMap<DisorderId, PosNeg> =
                disorders.iter().map(|d| (d.clone(), PosNeg::default())).collect();
            for post in dataset.posts() {
                let Some(labels) = dataset.labels(&post.id, src) else {
                    continue;
                };
                for d in disorders {
                    let e = counts.get_mut(d).expect("initialized");
                    match labels.get(d.as_str()).definite() {
                        Some(true) => e.positive += 1,
                        Some(false) => e.negative += 1,
                        None => {}
                    }
                }
            }
            DistributionRow {
                source: name.clone(),
                counts,
            }
        })
        .collect();
    LabelDistribution {
        disorders: disorders.to_vec(),
        rows,
    }
}

impl LabelDistribution {
    /// Aligned text: rows are sources, columns are disorder x {Pos, Neg}.
    pub fn render_table(&self) -> String {
        let mut header = vec!["Model".to_string()];
        for d in &self.disorders {
            header.push(format!("{d}+"));
            header.push(format!("{d}-"));
        }
        let mut rows = vec![header];
        for r in &self.rows {
            let mut row = vec![r.source.clone()];
            for d in &self.disorders {
                let c = r.counts[d];
                row.push(c.positive.to_string());
                row.push(c.negative.to_string());
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = widths[c])
                    } else {
                        format!("{s:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  "));
        }
        out
    }
}
