//! Run artifacts. Every run writes a manifest naming exactly what went
//! in, and every report is a pure function of its inputs: no
//! timestamps, no hostnames, no float noise.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("write {path}: {message}")]
    Io { path: String, message: String },
    #[error("serialize {name}: {message}")]
    Serialize { name: String, message: String },
}

/// Digest over the corpus content (provenance excluded).
pub fn corpus_digest(corpus: &Corpus) -> String {
    let canonical = serde_json::to_string(corpus).expect("corpus serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: serde_json::Value,
    pub corpus_digest: String,
    pub prompt_set_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_digest: Option<String>,
}

impl RunManifest {
    /// The run id is the first 12 hex digits of a digest over the
    /// configuration and the corpus, so identical inputs share an id.
    pub fn new(
        config: serde_json::Value,
        corpus_digest: String,
        prompt_set_digest: String,
        cache_digest: Option<String>,
    ) -> Self {
        let canonical = serde_json::to_string(&config).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher.update([0]);
        hasher.update(corpus_digest.as_bytes());
        let run_id = hex::encode(hasher.finalize())[..12].to_string();
        RunManifest {
            run_id,
            config,
            corpus_digest,
            prompt_set_digest,
            cache_digest,
        }
    }
}

/// A directory of reports tied to one manifest.
pub struct ReportSet {
    dir: PathBuf,
    run_id: String,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |e| ReportError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl ReportSet {
    /// Creates the directory and writes `manifest.json`.
    pub fn create(dir: &Path, manifest: &RunManifest) -> Result<Self, ReportError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let set = ReportSet {
            dir: dir.to_path_buf(),
            run_id: manifest.run_id.clone(),
        };
        set.write_json("manifest", manifest)?;
        Ok(set)
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn path(&self, file_name: &str) -> PathBuf {
        self.dir.join(file_name)
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), ReportError> {
        let body = serde_json::to_string_pretty(value).map_err(|e| ReportError::Serialize {
            name: name.to_string(),
            message: e.to_string(),
        })?;
        let path = self.path(&format!("{name}.json"));
        std::fs::write(&path, format!("{body}\n")).map_err(io_err(&path))?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), ReportError> {
        let path = self.path(&format!("{name}.txt"));
        let body = if text.ends_with('\n') {
            text.to_string()
        } else {
            format!("{text}\n")
        };
        std::fs::write(&path, body).map_err(io_err(&path))?;
        Ok(())
    }

    /// CSV with the run id as the leading column of every row.
    pub fn write_csv(
        &self,
        name: &str,
        headers: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), ReportError> {
        let path = self.path(&format!("{name}.csv"));
        let csv_err = |e: csv::Error| ReportError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut writer = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut header_row = vec!["run_id"];
        header_row.extend_from_slice(headers);
        writer.write_record(&header_row).map_err(csv_err)?;
        for row in rows {
            let mut record = vec![self.run_id.clone()];
            record.extend(row.iter().cloned());
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush().map_err(io_err(&path))?;
        Ok(())
    }
}

/// Monospace table with space-aligned columns and a dash rule under the
/// header.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let columns = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(columns) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: Vec<&str>, out: &mut String| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < columns {
                for _ in cell.len()..widths[i] {
                    line.push(' ');
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    render_row(headers.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    render_row(rule.iter().map(|s| s.as_str()).collect(), &mut out);
    for row in rows {
        render_row(row.iter().map(|s| s.as_str()).collect(), &mut out);
    }
    out
}

/// Two decimal places everywhere a percentage or rate is printed.
pub fn fmt2(value: f64) -> String {
    format!("{value:.2}")
}

/// Digest of the files in a directory tree, for run provenance.
pub fn tree_digest(dir: &Path) -> Result<String, ReportError> {
    fn walk(dir: &Path, files: &mut BTreeSet<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, files)?;
            } else {
                files.insert(path);
            }
        }
        Ok(())
    }
    let mut files = BTreeSet::new();
    walk(dir, &mut files).map_err(io_err(dir))?;
    let mut hasher = Sha256::new();
    for path in &files {
        let rel = path.strip_prefix(dir).unwrap_or(path);
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(std::fs::read(path).map_err(io_err(path))?);
        hasher.update([0]);
    }
    Ok(hex::encode(hasher.finalize()))
}
