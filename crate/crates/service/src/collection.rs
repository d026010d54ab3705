//! Append-only JSON-lines store of example records.
//!
//! Every append rewrites the file through a temporary sibling and an atomic
//! rename, so readers never observe a half-written line.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use fractile::analysis::ExampleRecord;
use fractile::export::{export_record, import_record};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}:{line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: fractile::Error,
    },
    #[error("{path}: duplicate id {id}")]
    DuplicateOnDisk { path: PathBuf, id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionMeta {
    pub name: String,
    pub created_at: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct Inner {
    records: Vec<ExampleRecord>,
    index: HashMap<String, usize>,
    /// Serialised lines, kept so a rewrite does not re-encode everything.
    lines: Vec<String>,
}

pub struct Collection {
    path: PathBuf,
    meta: CollectionMeta,
    inner: Mutex<Inner>,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Collection {
    /// Opens `path`, creating it (and its metadata sidecar) if missing.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let mut inner = Inner {
            records: Vec::new(),
            index: HashMap::new(),
            lines: Vec::new(),
        };
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record = import_record(line).map_err(|source| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    source,
                })?;
                if inner.index.contains_key(&record.id) {
                    return Err(StoreError::DuplicateOnDisk {
                        path: path.clone(),
                        id: record.id,
                    });
                }
                inner.index.insert(record.id.clone(), inner.records.len());
                inner.lines.push(line.to_string());
                inner.records.push(record);
            }
        } else {
            write_atomic(&path, b"")?;
        }
        let mp = meta_path(&path);
        let meta = if mp.exists() {
            serde_json::from_str(&fs::read_to_string(&mp)?)?
        } else {
            let meta = CollectionMeta {
                name: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "collection".into()),
                created_at: unix_now(),
            };
            write_atomic(&mp, serde_json::to_string_pretty(&meta)?.as_bytes())?;
            meta
        };
        Ok(Collection {
            path,
            meta,
            inner: Mutex::new(inner),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn meta(&self) -> &CollectionMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<ExampleRecord> {
        let inner = self.inner.lock().unwrap();
        inner.index.get(id).map(|&i| inner.records[i].clone())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.inner.lock().unwrap().index.contains_key(id)
    }

    /// Snapshot in insertion order.
    pub fn records(&self) -> Vec<ExampleRecord> {
        self.inner.lock().unwrap().records.clone()
    }

    /// Stamps and stores the records whose ids are new; returns what was
    /// stored. Known ids are skipped, so the call is idempotent.
    pub fn append(&self, records: Vec<ExampleRecord>) -> Result<Vec<ExampleRecord>, StoreError> {
        let mut inner = self.inner.lock().unwrap();
        let now = unix_now();
        let mut fresh = Vec::new();
        for mut r in records {
            if inner.index.contains_key(&r.id) || fresh.iter().any(|f: &ExampleRecord| f.id == r.id) {
                continue;
            }
            r.created_at.get_or_insert(now);
            fresh.push(r);
        }
        if fresh.is_empty() {
            return Ok(fresh);
        }
        let new_lines: Vec<String> = fresh.iter().map(export_record).collect();
        let mut text = String::new();
        for line in inner.lines.iter().chain(&new_lines) {
            text.push_str(line);
            text.push('\n');
        }
        write_atomic(&self.path, text.as_bytes())?;
        for (r, line) in fresh.iter().zip(new_lines) {
            let at = inner.records.len();
            inner.index.insert(r.id.clone(), at);
            inner.records.push(r.clone());
            inner.lines.push(line);
        }
        Ok(fresh)
    }

    /// Appends one record unless its id exists; `None` on collision.
    pub fn insert_new(&self, record: ExampleRecord) -> Result<Option<ExampleRecord>, StoreError> {
        Ok(self.append(vec![record])?.pop())
    }
}
