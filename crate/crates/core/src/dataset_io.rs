//! Line-delimited dataset files.
//!
//! Layout: one header record, one record per post (truth and annotations
//! embedded), one footer record carrying the post count. See
//! `docs/dataset-schema.md`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, PostRecord};
use crate::error::DatasetIoError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    record: String,
    schema_version: u32,
    meta: DatasetMeta,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    record: String,
    posts: usize,
}

/// Serializes `dataset` to the line-delimited format.
pub fn to_bytes(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    let header = Header {
        record: "header".into(),
        schema_version: SCHEMA_VERSION,
        meta: dataset.meta.clone(),
    };
    serde_json::to_writer(&mut out, &header).expect("header serializes");
    out.push(b'\n');
    for post in dataset.posts() {
        serde_json::to_writer(&mut out, &dataset.post_record(post)).expect("record serializes");
        out.push(b'\n');
    }
    let footer = Footer {
        record: "footer".into(),
        posts: dataset.len(),
    };
    serde_json::to_writer(&mut out, &footer).expect("footer serializes");
    out.push(b'\n');
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Dataset, DatasetIoError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DatasetIoError::Parse {
        offset: e.valid_up_to(),
        line: bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1,
        message: "invalid UTF-8".into(),
    })?;

    let mut lines = LineCursor::new(text);
    let (offset, line_no, header_line) = lines.next().ok_or(DatasetIoError::Parse {
        offset: 0,
        line: 1,
        message: "empty file".into(),
    })?;
    let header_value: serde_json::Value =
        serde_json::from_str(header_line).map_err(|e| parse_err(offset, line_no, header_line, e))?;
    match header_value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(DatasetIoError::Version {
                found: v as u32,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(DatasetIoError::Parse {
                offset,
                line: line_no,
                message: "header lacks schema_version".into(),
            })
        }
    }
    let header: Header = serde_json::from_value(header_value).map_err(|e| DatasetIoError::Parse {
        offset,
        line: line_no,
        message: e.to_string(),
    })?;

    let mut dataset = Dataset::new(header.meta);
    for (offset, line_no, line) in lines.by_ref() {
        if line.starts_with("{\"record\":\"footer\"") {
            let footer: Footer = serde_json::from_str(line).map_err(|e| parse_err(offset, line_no, line, e))?;
            if footer.posts != dataset.len() {
                return Err(DatasetIoError::Parse {
                    offset,
                    line: line_no,
                    message: format!("footer declares {} posts, file holds {}", footer.posts, dataset.len()),
                });
            }
            if let Some((offset, line_no, _)) = lines.next() {
                return Err(DatasetIoError::Parse {
                    offset,
                    line: line_no,
                    message: "content after footer".into(),
                });
            }
            return Ok(dataset);
        }
        let rec: PostRecord = serde_json::from_str(line).map_err(|e| parse_err(offset, line_no, line, e))?;
        dataset.absorb_record(rec)?;
    }
    Err(DatasetIoError::Parse {
        offset: bytes.len(),
        line: lines.line_no,
        message: "unexpected end of file: missing footer".into(),
    })
}

fn parse_err(line_offset: usize, line_no: usize, line: &str, e: serde_json::Error) -> DatasetIoError {
    // serde_json reports 1-based columns within the single-line input
    let col = e.column().saturating_sub(1).min(line.len());
    DatasetIoError::Parse {
        offset: line_offset + col,
        line: line_no,
        message: e.to_string(),
    }
}

struct LineCursor<'a> {
    text: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> LineCursor<'a> {
    fn new(text: &'a str) -> Self {
        LineCursor {
            text,
            pos: 0,
            line_no: 0,
        }
    }
}

impl<'a> Iterator for LineCursor<'a> {
    // (byte offset of line start, 1-based line number, line without newline)
    type Item = (usize, usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        while self.pos < self.text.len() {
            let start = self.pos;
            let rest = &self.text[start..];
            let (line, advance) = match rest.find('\n') {
                Some(i) => (&rest[..i], i + 1),
                None => (rest, rest.len()),
            };
            self.pos += advance;
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Some((start, self.line_no, line));
            }
        }
        None
    }
}

/// Writes atomically: the file is written beside `path` and renamed into place.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetIoError> {
    write_atomic(path, &to_bytes(dataset)).map_err(|source| DatasetIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetIoError> {
    let bytes = fs::read(path).map_err(|source| DatasetIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&bytes)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
