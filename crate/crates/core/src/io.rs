//! JSON Lines and hashing helpers shared by the stages.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| file_err(path, e))
}

/// Reads one record per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(|e| file_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| file_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        writeln!(w, "{line}").map_err(|e| file_err(path, e))?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

/// Appends records to an existing (or new) JSON Lines file.
pub fn append_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    ensure_parent(path)?;
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| file_err(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        writeln!(w, "{line}").map_err(|e| file_err(path, e))?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        line: 0,
        source,
    })
}

/// Writes pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        line: 0,
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Write-then-rename so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    ensure_parent(path)?;
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes).map_err(|e| file_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| file_err(path, e))
}

pub fn ensure_parent(path: &Path) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
        }
    }
    Ok(())
}

/// Lines of a one-term-per-line text file, skipping blanks and `#` comments.
pub fn term_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| file_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip_skips_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        write_jsonl(&path, &[1u32, 2, 3]).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push('\n');
        std::fs::write(&path, text).unwrap();
        append_jsonl(&path, &[4u32]).unwrap();
        let back: Vec<u32> = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![1, 2, 3, 4]);
    }

    #[test]
    fn bad_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, "1\nnope\n").unwrap();
        let err = read_jsonl::<u32>(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn term_lines_drops_comments() {
        let got: Vec<_> = term_lines("# c\n a \n\nb\n").collect();
        assert_eq!(got, ["a", "b"]);
    }
}
