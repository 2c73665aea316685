//! Source-corpus ingestion, the Dreaddit/DepSeverity merge, and seeded sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{CorpusTag, Dataset, DatasetMeta, Post};
use crate::error::{IngestError, MergeError, SampleError};
use crate::labels::{LabelSource, LabelState};
use crate::registry::DisorderId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    /// 0-based data row index (header excluded).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DreadditColumns {
    pub text: String,
    pub label: String,
    pub id: Option<String>,
}

impl Default for DreadditColumns {
    fn default() -> Self {
        DreadditColumns {
            text: "text".into(),
            label: "label".into(),
            id: Some("id".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepSeverityColumns {
    pub text: String,
    pub severity: String,
    pub id: Option<String>,
}

impl Default for DepSeverityColumns {
    fn default() -> Self {
        DepSeverityColumns {
            text: "text".into(),
            severity: "label".into(),
            id: Some("id".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmhdColumns {
    pub subreddit: String,
    pub text: String,
    pub id: Option<String>,
}

impl Default for RmhdColumns {
    fn default() -> Self {
        RmhdColumns {
            subreddit: "subreddit".into(),
            text: "post".into(),
            id: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DreadditRecord {
    pub post: Post,
    pub stress: bool,
    pub row_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Minimal,
    Mild,
    Moderate,
    Severe,
}

impl Severity {
    pub fn parse(s: &str) -> Option<Severity> {
        match s.trim().to_lowercase().as_str() {
            "minimal" | "minimum" => Some(Severity::Minimal),
            "mild" => Some(Severity::Mild),
            "moderate" => Some(Severity::Moderate),
            "severe" => Some(Severity::Severe),
            _ => None,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Minimal => "minimal",
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
        })
    }
}

/// minimal -> negative, mild | moderate | severe -> positive.
pub fn binarize_severity(severity: Severity) -> LabelState {
    match severity {
        Severity::Minimal => LabelState::Negative,
        Severity::Mild | Severity::Moderate | Severity::Severe => LabelState::Positive,
    }
}

pub const BINARIZATION_CUT: &str = "minimal=negative; mild,moderate,severe=positive";

#[derive(Debug, Clone)]
pub struct DepSeverityRecord {
    pub post: Post,
    pub severity: Severity,
    pub row_id: Option<String>,
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Table, IngestError> {
        let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let first_line = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
        let tabs = first_line.iter().filter(|b| **b == b'\t').count();
        let commas = first_line.iter().filter(|b| **b == b',').count();
        let delimiter = if tabs > commas { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .from_reader(bytes.as_slice());
        let csv_err = |source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
            .collect();
        let rows = reader.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
        Ok(Table {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize, IngestError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                path: self.path.clone(),
                column: name.to_string(),
            })
    }

    fn optional_column(&self, name: Option<&str>) -> Option<usize> {
        name.and_then(|n| self.headers.iter().position(|h| h == n))
    }
}

fn skip(skipped: &mut Vec<SkippedRow>, path: &Path, row: usize, reason: impl Into<String>) {
    let reason = reason.into();
    log::warn!("{}: skipping row {row}: {reason}", path.display());
    skipped.push(SkippedRow { row, reason });
}

fn cell(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("").trim()
}

pub fn load_dreaddit(path: &Path, cols: &DreadditColumns) -> Result<Loaded<DreadditRecord>, IngestError> {
    let table = Table::read(path)?;
    let text_i = table.column(&cols.text)?;
    let label_i = table.column(&cols.label)?;
    let id_i = table.optional_column(cols.id.as_deref());
    let mut out = Loaded {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for (row, rec) in table.rows.iter().enumerate() {
        let text = cell(rec, text_i);
        if text.is_empty() {
            skip(&mut out.skipped, path, row, "empty text");
            continue;
        }
        let stress = match cell(rec, label_i) {
            "1" | "1.0" => true,
            "0" | "0.0" => false,
            other => {
                skip(
                    &mut out.skipped,
                    path,
                    row,
                    format!("stress label `{other}` is not 0/1"),
                );
                continue;
            }
        };
        let row_id = id_i.map(|i| cell(rec, i).to_string()).filter(|s| !s.is_empty());
        let id = match &row_id {
            Some(r) => format!("dreaddit-{r}"),
            None => format!("dreaddit-row{row}"),
        };
        out.records.push(DreadditRecord {
            post: Post::new(id, text, CorpusTag::Dreaddit),
            stress,
            row_id,
        });
    }
    Ok(out)
}

pub fn load_depseverity(path: &Path, cols: &DepSeverityColumns) -> Result<Loaded<DepSeverityRecord>, IngestError> {
    let table = Table::read(path)?;
    let text_i = table.column(&cols.text)?;
    let sev_i = table.column(&cols.severity)?;
    let id_i = table.optional_column(cols.id.as_deref());
    let mut out = Loaded {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    let mut bad: BTreeSet<String> = BTreeSet::new();
    for (row, rec) in table.rows.iter().enumerate() {
        let text = cell(rec, text_i);
        if text.is_empty() {
            skip(&mut out.skipped, path, row, "empty text");
            continue;
        }
        let raw = cell(rec, sev_i);
        let Some(severity) = Severity::parse(raw) else {
            bad.insert(raw.to_string());
            continue;
        };
        let row_id = id_i.map(|i| cell(rec, i).to_string()).filter(|s| !s.is_empty());
        let id = match &row_id {
            Some(r) => format!("depseverity-{r}"),
            None => format!("depseverity-row{row}"),
        };
        out.records.push(DepSeverityRecord {
            post: Post::new(id, text, CorpusTag::Depseverity),
            severity,
            row_id,
        });
    }
    if !bad.is_empty() {
        return Err(IngestError::UnrecognizedSeverity {
            path: path.to_path_buf(),
            values: bad.into_iter().collect(),
        });
    }
    Ok(out)
}

/// SHA-256 (hex) of the lowercased, whitespace-collapsed text.
pub fn join_key(text: &str) -> String {
    let norm = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    hex::encode(Sha256::digest(norm.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub dreaddit_records: usize,
    pub depseverity_records: usize,
    pub dreaddit_unique: usize,
    pub depseverity_unique: usize,
    pub duplicate_conflicts: usize,
    pub matched_by_text: usize,
    pub matched_by_row_id: usize,
    pub join_rate: f64,
    pub unmatched_dreaddit: Vec<String>,
    pub unmatched_depseverity: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub dataset: Dataset,
    pub report: MergeReport,
}

pub const DEFAULT_MIN_JOIN_RATE: f64 = 0.95;

/// Collapses identical-text duplicates (first occurrence wins) and returns the
/// unique records keyed by join key, plus the number of conflicting duplicates.
fn dedupe<T>(
    records: &[T],
    text: impl Fn(&T) -> &str,
    same_label: impl Fn(&T, &T) -> bool,
) -> (Vec<(String, &T)>, usize) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut unique: Vec<(String, &T)> = Vec::new();
    let mut conflicts = 0;
    for r in records {
        let key = join_key(text(r));
        match seen.get(&key) {
            Some(&i) => {
                if !same_label(unique[i].1, r) {
                    conflicts += 1;
                }
            }
            None => {
                seen.insert(key.clone(), unique.len());
                unique.push((key, r));
            }
        }
    }
    (unique, conflicts)
}

/// Joins the two corpora into one dataset labeled for depression and stress.
///
/// Posts are matched on [`join_key`], falling back to the shared row id when
/// both records carry one. The join rate is matched / max(unique dreaddit,
/// unique depseverity).
pub fn merge_depseverity_dreaddit(
    dreaddit: &[DreadditRecord],
    depseverity: &[DepSeverityRecord],
    min_join_rate: f64,
) -> Result<MergeOutcome, MergeError> {
    let (d_unique, d_conf) = dedupe(dreaddit, |r| &r.post.text, |a, b| a.stress == b.stress);
    let (s_unique, s_conf) = dedupe(
        depseverity,
        |r| &r.post.text,
        |a, b| binarize_severity(a.severity) == binarize_severity(b.severity),
    );

    let s_by_key: HashMap<&str, usize> = s_unique.iter().enumerate().map(|(i, (k, _))| (k.as_str(), i)).collect();
    let s_by_id: HashMap<&str, usize> = s_unique
        .iter()
        .enumerate()
        .filter_map(|(i, (_, r))| r.row_id.as_deref().map(|id| (id, i)))
        .collect();

    let mut used = vec![false; s_unique.len()];
    let mut pairs: Vec<(&String, &DreadditRecord, &DepSeverityRecord)> = Vec::new();
    let mut unmatched_dreaddit = Vec::new();
    let (mut by_text, mut by_id) = (0, 0);
    for (key, d) in &d_unique {
        let hit = match s_by_key.get(key.as_str()) {
            Some(&i) if !used[i] => {
                by_text += 1;
                Some(i)
            }
            _ => match d.row_id.as_deref().and_then(|id| s_by_id.get(id)) {
                Some(&i) if !used[i] => {
                    by_id += 1;
                    Some(i)
                }
                _ => None,
            },
        };
        match hit {
            Some(i) => {
                used[i] = true;
                pairs.push((key, d, s_unique[i].1));
            }
            None => unmatched_dreaddit.push(d.post.id.clone()),
        }
    }
    let unmatched_depseverity: Vec<String> = s_unique
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|((_, r), _)| r.post.id.clone())
        .collect();

    let denom = d_unique.len().max(s_unique.len());
    let matched = pairs.len();
    let join_rate = if denom == 0 { 0.0 } else { matched as f64 / denom as f64 };
    if join_rate < min_join_rate {
        return Err(MergeError::LowJoinRate {
            rate: join_rate,
            threshold: min_join_rate,
            matched,
            dreaddit: d_unique.len(),
            depseverity: s_unique.len(),
        });
    }

    let report = MergeReport {
        dreaddit_records: dreaddit.len(),
        depseverity_records: depseverity.len(),
        dreaddit_unique: d_unique.len(),
        depseverity_unique: s_unique.len(),
        duplicate_conflicts: d_conf + s_conf,
        matched_by_text: by_text,
        matched_by_row_id: by_id,
        join_rate,
        unmatched_dreaddit,
        unmatched_depseverity,
    };

    let mut meta = DatasetMeta {
        name: "depseverity-dreaddit".into(),
        seed: None,
        params: BTreeMap::new(),
    };
    meta.params.insert("binarization".into(), BINARIZATION_CUT.into());
    meta.params.insert(
        "join_key".into(),
        "sha256(lowercase(collapse_whitespace(text))), fallback shared row id".into(),
    );
    meta.params.insert(
        "join".into(),
        serde_json::json!({
            "matched_by_text": by_text,
            "matched_by_row_id": by_id,
            "join_rate": join_rate,
            "dreaddit_unique": report.dreaddit_unique,
            "depseverity_unique": report.depseverity_unique,
            "unmatched_dreaddit": report.unmatched_dreaddit.len(),
            "unmatched_depseverity": report.unmatched_depseverity.len(),
            "duplicate_conflicts": report.duplicate_conflicts,
        }),
    );

    let mut dataset = Dataset::new(meta);
    for (key, d, s) in pairs {
        let id = format!("dd-{}", &key[..16]);
        let mut post = Post::new(id.clone(), d.post.text.clone(), CorpusTag::Merged);
        post.origin_subreddit = d.post.origin_subreddit.clone();
        dataset.push_post(post).expect("join keys are unique");
        dataset
            .set_truth(
                &id,
                "depression".into(),
                binarize_severity(s.severity),
                LabelSource::Corpus,
            )
            .expect("post exists");
        dataset
            .set_truth(
                &id,
                "stress".into(),
                LabelState::from_bool(d.stress),
                LabelSource::Corpus,
            )
            .expect("post exists");
    }
    Ok(MergeOutcome { dataset, report })
}

/// Subreddit-to-group mapping for RMHD ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubredditFilter {
    pub disorders: BTreeMap<String, DisorderId>,
    pub controls: BTreeSet<String>,
}

impl Default for SubredditFilter {
    fn default() -> Self {
        let disorders = [
            ("adhd", "adhd"),
            ("anxiety", "anxiety"),
            ("depression", "depression"),
            ("edanonymous", "eating_disorder"),
            ("ptsd", "ptsd"),
            ("suicidewatch", "suicide"),
        ]
        .into_iter()
        .map(|(s, d)| (s.to_string(), DisorderId::new(d)))
        .collect();
        let controls = ["conspiracy", "jokes", "teaching", "personalfinance", "legaladvice"]
            .into_iter()
            .map(String::from)
            .collect();
        SubredditFilter { disorders, controls }
    }
}

pub fn normalize_subreddit(s: &str) -> String {
    let s = s.trim().to_lowercase();
    s.strip_prefix("r/").unwrap_or(&s).to_string()
}

/// Loads RMHD posts from the filtered subreddits. Rows from other subreddits
/// are dropped silently; empty or duplicate rows are skipped with a warning.
pub fn load_rmhd(path: &Path, cols: &RmhdColumns, filter: &SubredditFilter) -> Result<Loaded<Post>, IngestError> {
    let table = Table::read(path)?;
    let sub_i = table.column(&cols.subreddit)?;
    let text_i = table.column(&cols.text)?;
    let id_i = table.optional_column(cols.id.as_deref());
    let mut out = Loaded {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    let mut seen: HashSet<String> = HashSet::new();
    for (row, rec) in table.rows.iter().enumerate() {
        let sub = normalize_subreddit(cell(rec, sub_i));
        let origin = filter.disorders.get(&sub).cloned();
        let is_control = filter.controls.contains(&sub);
        if origin.is_none() && !is_control {
            continue;
        }
        let text = cell(rec, text_i);
        if text.is_empty() {
            skip(&mut out.skipped, path, row, "empty text");
            continue;
        }
        let id = match id_i.map(|i| cell(rec, i)).filter(|s| !s.is_empty()) {
            Some(r) => format!("rmhd-{r}"),
            None => format!("rmhd-{sub}-{}", &join_key(text)[..16]),
        };
        if !seen.insert(id.clone()) {
            skip(&mut out.skipped, path, row, format!("duplicate post `{id}`"));
            continue;
        }
        let mut post = Post::new(id, text, CorpusTag::Rmhd);
        post.origin_subreddit = Some(sub);
        post.origin_disorder = origin;
        post.is_control = is_control;
        out.records.push(post);
    }
    Ok(out)
}

/// Grouping used by the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    /// Origin disorder id; control posts form the group `control`.
    OriginDisorder,
    Subreddit,
}

pub const CONTROL_GROUP: &str = "control";

pub fn group_of(post: &Post, key: GroupKey) -> Option<String> {
    match key {
        GroupKey::OriginDisorder => match (&post.origin_disorder, post.is_control) {
            (Some(d), _) => Some(d.to_string()),
            (None, true) => Some(CONTROL_GROUP.to_string()),
            (None, false) => None,
        },
        GroupKey::Subreddit => post.origin_subreddit.clone(),
    }
}

fn group_seed(seed: u64, group: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(group.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Draws `n` ids out of `candidates` without replacement. Candidates are sorted
/// first so the draw depends only on the set, the group name and the seed.
pub fn draw(candidates: &[&str], n: usize, seed: u64, group: &str) -> Result<Vec<String>, SampleError> {
    if candidates.len() < n {
        return Err(SampleError::ShortGroup {
            group: group.to_string(),
            available: candidates.len(),
            requested: n,
        });
    }
    let mut sorted: Vec<&str> = candidates.to_vec();
    sorted.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(group_seed(seed, group));
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, sorted.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| sorted[i].to_string()).collect())
}

/// Groups posts by `key`, skipping posts in `exclude` and posts without a group.
pub fn groups<'a>(dataset: &'a Dataset, key: GroupKey, exclude: &HashSet<String>) -> BTreeMap<String, Vec<&'a str>> {
    let mut g: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for p in dataset.posts() {
        if exclude.contains(&p.id) {
            continue;
        }
        if let Some(k) = group_of(p, key) {
            g.entry(k).or_default().push(&p.id);
        }
    }
    g
}

/// Exactly `sizes[g]` posts from each listed group. Returns the selected ids.
pub fn sample_groups(
    dataset: &Dataset,
    key: GroupKey,
    sizes: &BTreeMap<String, usize>,
    seed: u64,
    exclude: &HashSet<String>,
) -> Result<Vec<String>, SampleError> {
    let g = groups(dataset, key, exclude);
    let mut chosen = Vec::new();
    for (group, &n) in sizes {
        let cands = g.get(group).map(Vec::as_slice).unwrap_or(&[]);
        chosen.extend(draw(cands, n, seed, group)?);
    }
    Ok(chosen)
}

/// `n` posts from every group present in the dataset.
pub fn sample_per_group(dataset: &Dataset, key: GroupKey, n: usize, seed: u64) -> Result<Dataset, SampleError> {
    let sizes: BTreeMap<String, usize> = groups(dataset, key, &HashSet::new())
        .into_keys()
        .map(|g| (g, n))
        .collect();
    let ids = sample_groups(dataset, key, &sizes, seed, &HashSet::new())?;
    let mut out = dataset.subset(ids.iter().map(String::as_str));
    out.meta.seed = Some(seed);
    out.meta.params.insert(
        "sample".into(),
        serde_json::json!({ "group_key": key, "per_group": n, "seed": seed }),
    );
    Ok(out)
}

/// Control posts spread evenly over their subreddits: `n / k` each for `k`
/// subreddits, the remainder going to the first subreddits in sorted order.
pub fn sample_controls(
    dataset: &Dataset,
    n: usize,
    seed: u64,
    exclude: &HashSet<String>,
) -> Result<Vec<String>, SampleError> {
    let mut by_sub: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for p in dataset
        .posts()
        .iter()
        .filter(|p| p.is_control && !exclude.contains(&p.id))
    {
        let sub = p.origin_subreddit.clone().unwrap_or_else(|| CONTROL_GROUP.into());
        by_sub.entry(sub).or_default().push(&p.id);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if by_sub.is_empty() {
        return Err(SampleError::ShortGroup {
            group: CONTROL_GROUP.into(),
            available: 0,
            requested: n,
        });
    }
    let k = by_sub.len();
    let mut out = Vec::with_capacity(n);
    for (i, (sub, cands)) in by_sub.iter().enumerate() {
        let quota = n / k + usize::from(i < n % k);
        out.extend(draw(cands, quota, seed, &format!("{CONTROL_GROUP}/{sub}"))?);
    }
    Ok(out)
}

/// RMHD sampling: `per_disorder` posts from each disorder group present and
/// `controls` control posts spread over the control subreddits.
pub fn sample_rmhd(
    dataset: &Dataset,
    per_disorder: usize,
    controls: usize,
    seed: u64,
    exclude: &HashSet<String>,
) -> Result<Vec<String>, SampleError> {
    let sizes: BTreeMap<String, usize> = groups(dataset, GroupKey::OriginDisorder, exclude)
        .into_keys()
        .filter(|g| g != CONTROL_GROUP)
        .map(|g| (g, per_disorder))
        .collect();
    let mut ids = sample_groups(dataset, GroupKey::OriginDisorder, &sizes, seed, exclude)?;
    ids.extend(sample_controls(dataset, controls, seed, exclude)?);
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn dreaddit_rows_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.csv",
            "id,text,label\n1,\"I can't sleep...\",1\n2,,0\n3,fine,2\n4,ok,0\n",
        );
        let l = load_dreaddit(&p, &DreadditColumns::default()).unwrap();
        assert_eq!(l.records.len(), 2);
        assert!(l.records[0].stress);
        assert_eq!(l.records[0].post.text, "I can't sleep...");
        assert_eq!(l.skipped.iter().map(|s| s.row).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn dreaddit_missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,body,label\n1,x,1\n");
        match load_dreaddit(&p, &DreadditColumns::default()) {
            Err(IngestError::MissingColumn { column, .. }) => assert_eq!(column, "text"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn depseverity_normalizes_and_rejects() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.tsv", "text\tlabel\na\tModerate\nb\tSEVERE\nc\tminimum\n");
        let l = load_depseverity(&p, &DepSeverityColumns::default()).unwrap();
        let sev: Vec<Severity> = l.records.iter().map(|r| r.severity).collect();
        assert_eq!(sev, vec![Severity::Moderate, Severity::Severe, Severity::Minimal]);
        let p = write(dir.path(), "bad.csv", "text,label\na,extreme\n");
        match load_depseverity(&p, &DepSeverityColumns::default()) {
            Err(e @ IngestError::UnrecognizedSeverity { .. }) => {
                assert!(e.to_string().contains("unrecognized severity"));
                assert!(e.to_string().contains("extreme"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn binarization_cut() {
        assert_eq!(binarize_severity(Severity::Minimal), LabelState::Negative);
        assert_eq!(binarize_severity(Severity::Mild), LabelState::Positive);
        assert_eq!(binarize_severity(Severity::Severe), LabelState::Positive);
    }

    fn drec(id: &str, text: &str, stress: bool) -> DreadditRecord {
        DreadditRecord {
            post: Post::new(format!("dreaddit-{id}"), text, CorpusTag::Dreaddit),
            stress,
            row_id: Some(id.into()),
        }
    }

    fn srec(id: &str, text: &str, severity: Severity) -> DepSeverityRecord {
        DepSeverityRecord {
            post: Post::new(format!("depseverity-{id}"), text, CorpusTag::Depseverity),
            severity,
            row_id: Some(id.into()),
        }
    }

    #[test]
    fn merge_labels_pairs() {
        let d = vec![drec("1", "Post  One", true), drec("2", "post two", false)];
        let s = vec![
            srec("9", "post two", Severity::Minimal),
            srec("8", "post one", Severity::Moderate),
        ];
        let m = merge_depseverity_dreaddit(&d, &s, 0.95).unwrap();
        assert_eq!(m.dataset.len(), 2);
        let first = &m.dataset.posts()[0];
        let t = m.dataset.truth(&first.id).unwrap();
        assert_eq!(t.get("depression"), LabelState::Positive);
        assert_eq!(t.get("stress"), LabelState::Positive);
        let t = m.dataset.truth(&m.dataset.posts()[1].id).unwrap();
        assert_eq!(t.get("depression"), LabelState::Negative);
        assert_eq!(t.get("stress"), LabelState::Negative);
        assert_eq!(m.report.matched_by_text, 2);
    }

    #[test]
    fn merge_falls_back_to_row_id_and_enforces_rate() {
        let d = vec![drec("1", "edited text", true), drec("2", "same", false)];
        let s = vec![
            srec("1", "original text", Severity::Mild),
            srec("3", "same", Severity::Mild),
        ];
        let m = merge_depseverity_dreaddit(&d, &s, 0.95).unwrap();
        assert_eq!((m.report.matched_by_text, m.report.matched_by_row_id), (1, 1));

        let s = vec![srec("7", "other", Severity::Mild), srec("3", "same", Severity::Mild)];
        match merge_depseverity_dreaddit(&d, &s, 0.95) {
            Err(MergeError::LowJoinRate { matched, .. }) => assert_eq!(matched, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn merge_collapses_duplicates() {
        let d = vec![drec("1", "dup", true), drec("2", "DUP ", true), drec("3", "x", false)];
        let s = vec![srec("1", "dup", Severity::Mild), srec("3", "x", Severity::Severe)];
        let m = merge_depseverity_dreaddit(&d, &s, 0.95).unwrap();
        assert_eq!(m.dataset.len(), 2);
        assert_eq!(m.report.dreaddit_unique, 2);
    }

    fn rmhd_fixture(dir: &Path) -> PathBuf {
        let mut body = String::from("subreddit,post\n");
        for i in 0..12 {
            body.push_str(&format!("ptsd,ptsd post {i}\n"));
            body.push_str(&format!("r/jokes,joke {i}\n"));
            body.push_str(&format!("teaching,lesson {i}\n"));
            body.push_str(&format!("gaming,game {i}\n"));
        }
        write(dir, "r.csv", &body)
    }

    #[test]
    fn rmhd_filter_semantics() {
        let dir = tempfile::tempdir().unwrap();
        let l = load_rmhd(
            &rmhd_fixture(dir.path()),
            &RmhdColumns::default(),
            &SubredditFilter::default(),
        )
        .unwrap();
        assert_eq!(l.records.len(), 36);
        let ptsd = l.records.iter().find(|p| p.text == "ptsd post 0").unwrap();
        assert_eq!(ptsd.origin_disorder, Some(DisorderId::new("ptsd")));
        let joke = l.records.iter().find(|p| p.text == "joke 0").unwrap();
        assert!(joke.is_control && joke.origin_disorder.is_none());
        assert!(l.records.iter().all(|p| !p.text.starts_with("game")));
    }

    #[test]
    fn sampling_is_deterministic_and_exact() {
        let dir = tempfile::tempdir().unwrap();
        let l = load_rmhd(
            &rmhd_fixture(dir.path()),
            &RmhdColumns::default(),
            &SubredditFilter::default(),
        )
        .unwrap();
        let d = Dataset::from_posts(DatasetMeta::default(), l.records).unwrap();
        let a = sample_per_group(&d, GroupKey::OriginDisorder, 5, 7).unwrap();
        let b = sample_per_group(&d, GroupKey::OriginDisorder, 5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        let c = sample_per_group(&d, GroupKey::OriginDisorder, 5, 8).unwrap();
        assert_ne!(
            a.posts().iter().map(|p| &p.id).collect::<Vec<_>>(),
            c.posts().iter().map(|p| &p.id).collect::<Vec<_>>()
        );
        match sample_per_group(&d, GroupKey::OriginDisorder, 13, 7) {
            Err(SampleError::ShortGroup { available, .. }) => assert_eq!(available, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn controls_spread_over_subreddits() {
        let dir = tempfile::tempdir().unwrap();
        let l = load_rmhd(
            &rmhd_fixture(dir.path()),
            &RmhdColumns::default(),
            &SubredditFilter::default(),
        )
        .unwrap();
        let d = Dataset::from_posts(DatasetMeta::default(), l.records).unwrap();
        let ids = sample_controls(&d, 7, 1, &HashSet::new()).unwrap();
        assert_eq!(ids.len(), 7);
        let jokes = ids.iter().filter(|i| i.starts_with("rmhd-jokes")).count();
        assert_eq!(jokes, 4);
    }
}
