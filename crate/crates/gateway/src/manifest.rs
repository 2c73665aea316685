//! Checkpoint journal for annotation passes.
//!
//! A header line names the pass; each finished post appends its full
//! annotation and each failed post appends its error. Rerunning the same pass
//! restores finished posts from the journal and only requests the rest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use labelforge_core::{Annotation, PromptKind};
use serde::{Deserialize, Serialize};

use crate::error::ManifestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassHeader {
    pub model_id: String,
    pub prompt_kind: PromptKind,
    /// Human-readable description of which disorders the pass covers.
    pub scope: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Entry {
    Header(PassHeader),
    Done { annotation: Annotation },
    Failed { post_id: String, error: String },
}

pub struct Manifest {
    path: PathBuf,
    file: File,
    done: BTreeMap<String, Annotation>,
    failed: BTreeMap<String, String>,
}

impl Manifest {
    /// Opens the journal for `header`, resuming it when it belongs to the same
    /// pass and starting over otherwise.
    pub fn open(path: &Path, header: &PassHeader) -> Result<Self, ManifestError> {
        let io = |source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut done = BTreeMap::new();
        let mut failed = BTreeMap::new();
        let mut resume = false;
        if path.exists() {
            let text = fs::read_to_string(path).map_err(io)?;
            let mut lines = text.split_inclusive('\n').enumerate().peekable();
            if let Some((_, first)) = lines.next() {
                match serde_json::from_str::<Entry>(first.trim_end()) {
                    Ok(Entry::Header(h)) if &h == header => resume = true,
                    _ => log::warn!("{}: belongs to a different pass; starting over", path.display()),
                }
            }
            if resume {
                while let Some((i, line)) = lines.next() {
                    let last = lines.peek().is_none();
                    match serde_json::from_str::<Entry>(line.trim_end()) {
                        Ok(Entry::Done { annotation }) => {
                            failed.remove(&annotation.post_id);
                            done.insert(annotation.post_id.clone(), annotation);
                        }
                        Ok(Entry::Failed { post_id, error }) => {
                            failed.insert(post_id, error);
                        }
                        Ok(Entry::Header(_)) => {
                            return Err(ManifestError::Parse {
                                path: path.to_path_buf(),
                                line: i + 1,
                                message: "second header".into(),
                            })
                        }
                        Err(_) if last && !line.ends_with('\n') => {
                            log::warn!("{}: dropping torn final line", path.display());
                        }
                        Err(e) => {
                            return Err(ManifestError::Parse {
                                path: path.to_path_buf(),
                                line: i + 1,
                                message: e.to_string(),
                            })
                        }
                    }
                }
            }
        }

        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        // Rewrite compactly: header, surviving entries, nothing torn.
        let mut file = File::create(path).map_err(io)?;
        let mut buf = Vec::new();
        push_line(&mut buf, &Entry::Header(header.clone()));
        for a in done.values() {
            push_line(&mut buf, &Entry::Done { annotation: a.clone() });
        }
        for (post_id, error) in &failed {
            push_line(
                &mut buf,
                &Entry::Failed {
                    post_id: post_id.clone(),
                    error: error.clone(),
                },
            );
        }
        file.write_all(&buf).map_err(io)?;
        file.sync_data().map_err(io)?;
        drop(file);
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        Ok(Manifest {
            path: path.to_path_buf(),
            file,
            done,
            failed,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn done(&self) -> &BTreeMap<String, Annotation> {
        &self.done
    }

    /// Posts whose last recorded outcome was a failure.
    pub fn failed(&self) -> &BTreeMap<String, String> {
        &self.failed
    }

    pub fn record_done(&mut self, annotation: &Annotation) -> Result<(), ManifestError> {
        self.append(&Entry::Done {
            annotation: annotation.clone(),
        })?;
        self.failed.remove(&annotation.post_id);
        self.done.insert(annotation.post_id.clone(), annotation.clone());
        Ok(())
    }

    pub fn record_failed(&mut self, post_id: &str, error: &str) -> Result<(), ManifestError> {
        self.append(&Entry::Failed {
            post_id: post_id.to_string(),
            error: error.to_string(),
        })?;
        self.failed.insert(post_id.to_string(), error.to_string());
        Ok(())
    }

    /// Deletes the journal once its pass has nothing left to resume.
    pub fn finish(self) -> Result<(), ManifestError> {
        drop(self.file);
        fs::remove_file(&self.path).map_err(|source| ManifestError::Io {
            path: self.path.clone(),
            source,
        })
    }

    fn append(&mut self, entry: &Entry) -> Result<(), ManifestError> {
        let mut buf = Vec::new();
        push_line(&mut buf, entry);
        let io = |source| ManifestError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&buf).map_err(io)?;
        self.file.flush().map_err(io)
    }
}

fn push_line(buf: &mut Vec<u8>, entry: &Entry) {
    serde_json::to_writer(&mut *buf, entry).expect("manifest entry serializes");
    buf.push(b'\n');
}

/// Journal location for one (model, prompt kind) pass writing to `output`.
pub fn manifest_path(output: &Path, model_id: &str, kind: PromptKind) -> PathBuf {
    let safe: String = model_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{safe}.{}.manifest.jsonl", kind.as_str()));
    output.with_file_name(name)
}
