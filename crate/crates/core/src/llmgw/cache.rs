//! Content-addressed response cache backing record and replay modes.
//!
//! Layout on disk:
//!
//! ```text
//! <dir>/index.json            digest -> entry file
//! <dir>/entries/<digest>.json full request + response
//! ```
//!
//! Entry files carry the complete request so a cache can be audited
//! without the code that produced it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LlmError, LlmRequest};

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    entries: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryFile {
    digest: String,
    request: LlmRequest,
    response: CachedEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CachedEntry {
    pub raw_text: String,
    pub backend_id: String,
}

pub struct ReplayCache {
    dir: PathBuf,
    entries: Mutex<BTreeMap<String, String>>,
}

impl ReplayCache {
    /// Opens a cache directory, creating it when absent.
    pub fn open(dir: &Path) -> Result<Self, LlmError> {
        std::fs::create_dir_all(dir.join("entries"))
            .map_err(|e| LlmError::Cache(format!("create {}: {e}", dir.display())))?;
        let index_path = dir.join("index.json");
        let entries = if index_path.exists() {
            let raw = std::fs::read_to_string(&index_path)
                .map_err(|e| LlmError::Cache(format!("read {}: {e}", index_path.display())))?;
            let index: IndexFile = serde_json::from_str(&raw)
                .map_err(|e| LlmError::Cache(format!("parse {}: {e}", index_path.display())))?;
            index.entries
        } else {
            BTreeMap::new()
        };
        Ok(ReplayCache {
            dir: dir.to_path_buf(),
            entries: Mutex::new(entries),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, digest: &str) -> Result<Option<CachedEntry>, LlmError> {
        let rel = match self.entries.lock().unwrap().get(digest) {
            Some(rel) => rel.clone(),
            None => return Ok(None),
        };
        let path = self.dir.join(&rel);
        let raw = std::fs::read_to_string(&path)
            .map_err(|e| LlmError::Cache(format!("read {}: {e}", path.display())))?;
        let entry: EntryFile = serde_json::from_str(&raw)
            .map_err(|e| LlmError::Cache(format!("parse {}: {e}", path.display())))?;
        Ok(Some(entry.response))
    }

    /// Persists a response under its request digest. The entry file is
    /// written before the index so a torn write can't orphan the index.
    pub fn put(
        &self,
        digest: &str,
        request: &LlmRequest,
        raw_text: &str,
        backend_id: &str,
    ) -> Result<(), LlmError> {
        let rel = format!("entries/{digest}.json");
        let entry = EntryFile {
            digest: digest.to_string(),
            request: request.clone(),
            response: CachedEntry {
                raw_text: raw_text.to_string(),
                backend_id: backend_id.to_string(),
            },
        };
        let body = serde_json::to_string_pretty(&entry)
            .map_err(|e| LlmError::Cache(format!("serialize entry: {e}")))?;
        write_atomically(&self.dir.join(&rel), &body)?;
        let mut entries = self.entries.lock().unwrap();
        entries.insert(digest.to_string(), rel);
        let index = IndexFile {
            version: 1,
            entries: entries.clone(),
        };
        let body = serde_json::to_string_pretty(&index)
            .map_err(|e| LlmError::Cache(format!("serialize index: {e}")))?;
        write_atomically(&self.dir.join("index.json"), &body)
    }

    /// Digest of the whole cache: sha256 over the sorted entry digests.
    pub fn digest(&self) -> String {
        let entries = self.entries.lock().unwrap();
        let mut hasher = Sha256::new();
        for digest in entries.keys() {
            hasher.update(digest.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

fn write_atomically(path: &Path, body: &str) -> Result<(), LlmError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body.as_bytes())
        .map_err(|e| LlmError::Cache(format!("write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| LlmError::Cache(format!("rename {}: {e}", path.display())))
}
