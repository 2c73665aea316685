//! Persistent response cache.
//!
//! One JSON record per line, appended and fsynced per write. A torn final line
//! left by a crash is dropped when the cache is reopened. The layout is
//! documented in `docs/cache-format.md` so fixtures can be written by hand.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_id: String,
    pub temperature: f64,
    pub prompt_sha256: String,
    pub response: String,
}

/// Digest of (model id, temperature, full prompt text). Fields are length
/// prefixed so no two distinct triples collide by concatenation.
pub fn cache_key(model_id: &str, temperature: f64, prompt_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"labelforge-cache-v1");
    for part in [
        model_id.as_bytes(),
        &temperature.to_bits().to_le_bytes(),
        prompt_text.as_bytes(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

pub struct ResponseCache {
    path: PathBuf,
    inner: Mutex<Inner>,
}

struct Inner {
    map: HashMap<String, CacheRecord>,
    file: File,
}

impl ResponseCache {
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let io = |source| GatewayError::Cache {
            path: path.to_path_buf(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;

        let mut map = HashMap::new();
        let mut good_len = 0usize;
        let mut pos = 0usize;
        let mut line_no = 0usize;
        while pos < text.len() {
            line_no += 1;
            let rest = &text[pos..];
            let Some(nl) = rest.find('\n') else {
                log::warn!("{}: dropping torn final line {line_no}", path.display());
                break;
            };
            let line = &rest[..nl];
            pos += nl + 1;
            if line.trim().is_empty() {
                good_len = pos;
                continue;
            }
            match serde_json::from_str::<CacheRecord>(line) {
                Ok(rec) => {
                    map.entry(rec.key.clone()).or_insert(rec);
                    good_len = pos;
                }
                Err(e) if pos >= text.len() => {
                    log::warn!("{}: dropping unreadable final line {line_no}: {e}", path.display());
                    break;
                }
                Err(e) => {
                    return Err(io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("line {line_no}: {e}"),
                    )))
                }
            }
        }
        if good_len < text.len() {
            file.set_len(good_len as u64).map_err(io)?;
        }
        Ok(ResponseCache {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner { map, file }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner
            .lock()
            .expect("cache lock")
            .map
            .get(key)
            .map(|r| r.response.clone())
    }

    /// Appends `record` unless its key is already present.
    pub fn put(&self, record: CacheRecord) -> Result<(), GatewayError> {
        let mut inner = self.inner.lock().expect("cache lock");
        if inner.map.contains_key(&record.key) {
            return Ok(());
        }
        let mut line = serde_json::to_vec(&record).expect("cache record serializes");
        line.push(b'\n');
        let io = |source| GatewayError::Cache {
            path: self.path.clone(),
            source,
        };
        inner.file.write_all(&line).map_err(io)?;
        inner.file.sync_data().map_err(io)?;
        inner.map.insert(record.key.clone(), record);
        Ok(())
    }
}
