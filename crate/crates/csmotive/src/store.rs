//! Append-only annotation log with a compacted in-memory view.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use csmotive_core::annotation::{AnnotationIndex, AnnotationRecord};

use crate::io::{read_jsonl, IoError};

/// Records are appended to the log file (when there is one) before the
/// in-memory index is updated; both happen under one lock, so each
/// (instance, annotator) write is atomic with respect to readers.
#[derive(Debug)]
pub struct AnnotationStore {
    inner: Mutex<Inner>,
}

#[derive(Debug)]
struct Inner {
    log: Option<(PathBuf, File)>,
    index: AnnotationIndex,
}

impl AnnotationStore {
    pub fn in_memory() -> Self {
        AnnotationStore { inner: Mutex::new(Inner { log: None, index: AnnotationIndex::new() }) }
    }

    /// Opens (creating if needed) the log at `path` and replays it.
    pub fn open(path: &Path) -> Result<Self, IoError> {
        let index = if path.exists() {
            AnnotationIndex::compact(read_jsonl::<AnnotationRecord>(path)?)
        } else {
            AnnotationIndex::new()
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
        Ok(AnnotationStore { inner: Mutex::new(Inner { log: Some((path.to_path_buf(), file)), index }) })
    }

    pub fn append(&self, record: AnnotationRecord) -> Result<(), IoError> {
        let mut inner = self.inner.lock().expect("store lock poisoned");
        if let Some((path, file)) = inner.log.as_mut() {
            let mut line = serde_json::to_string(&record).expect("records serialize");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|()| file.flush())
                .map_err(|source| IoError::Io { path: path.clone(), source })?;
        }
        inner.index.insert(record);
        Ok(())
    }

    /// A consistent copy of the compacted records.
    pub fn snapshot(&self) -> AnnotationIndex {
        self.inner.lock().expect("store lock poisoned").index.clone()
    }

    pub fn with_index<R>(&self, f: impl FnOnce(&AnnotationIndex) -> R) -> R {
        f(&self.inner.lock().expect("store lock poisoned").index)
    }
}
