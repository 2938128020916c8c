//! JSONL readers and writers for corpora, instances and annotations, and
//! transcript loading.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use csmotive_core::chat::{parse_transcript, ParseError, ParserProfile};
use csmotive_core::transcript::{CorpusRecord, TranscriptError};
use csmotive_core::Transcript;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Transcript { path: PathBuf, source: TranscriptError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Writes the whole file through a temporary sibling and renames it into
/// place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        w.write_all(contents).map_err(io_err(&tmp))?;
        w.flush().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    write_atomic(path, to_jsonl(items).as_bytes())
}

pub fn read_corpus(path: &Path) -> Result<Vec<Transcript>, IoError> {
    let records: Vec<CorpusRecord> = read_jsonl(path)?;
    Transcript::from_records(records).map_err(|source| IoError::Transcript { path: path.to_path_buf(), source })
}

pub fn corpus_records(transcripts: &[Transcript]) -> Vec<CorpusRecord> {
    transcripts.iter().flat_map(Transcript::to_records).collect()
}

pub fn write_corpus(path: &Path, transcripts: &[Transcript]) -> Result<(), IoError> {
    write_jsonl(path, &corpus_records(transcripts))
}

/// Transcript id for a file: its stem.
pub fn transcript_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn parse_file(path: &Path, profile: &ParserProfile) -> Result<Transcript, IoError> {
    let raw = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_transcript(&transcript_id(path), &raw, profile).map_err(|source| IoError::Parse { path: path.to_path_buf(), source })
}

/// Expands directories to their `.cha`/`.txt` files, sorted by name.
pub fn transcript_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, IoError> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut files = Vec::new();
            for entry in std::fs::read_dir(input).map_err(io_err(input))? {
                let p = entry.map_err(io_err(input))?.path();
                if matches!(p.extension().and_then(|e| e.to_str()), Some("cha" | "txt")) {
                    files.push(p);
                }
            }
            files.sort();
            out.extend(files);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

/// Parses files concurrently; results keep the input order.
pub fn parse_files(paths: &[PathBuf], profile: &ParserProfile) -> Vec<Result<Transcript, IoError>> {
    paths.par_iter().map(|p| parse_file(p, profile)).collect()
}
