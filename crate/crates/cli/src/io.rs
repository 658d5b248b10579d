use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::de::DeserializeOwned;
use tempfile::NamedTempFile;

use crate::Failure;

/// Records handed to the worker pool at a time.
const CHUNK: usize = 8192;
/// Malformed records quoted in a report.
const KEPT_ERRORS: usize = 20;

pub fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::config(format!("input file {} does not exist", path.display())))
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))
}

/// A file that appears at its final path only once [`Output::commit`] runs;
/// dropping it earlier leaves nothing behind.
pub struct Output {
    path: PathBuf,
    writer: BufWriter<NamedTempFile>,
}

impl Output {
    pub fn create(path: &Path) -> Result<Output, Failure> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = tempfile::Builder::new()
            .prefix(".kgcorpus-")
            .tempfile_in(dir)
            .map_err(|e| Failure::config(format!("cannot write to {}: {e}", dir.display())))?;
        Ok(Output { path: path.to_path_buf(), writer: BufWriter::new(tmp) })
    }

    pub fn commit(self) -> Result<(), Failure> {
        let path = self.path;
        let tmp = self.writer.into_inner().map_err(|e| Failure::io(&path, e.into_error()))?;
        tmp.as_file().sync_all().map_err(|e| Failure::io(&path, e))?;
        tmp.persist(&path).map_err(|e| Failure::io(&path, e.error))?;
        Ok(())
    }

    pub fn write_line(&mut self, line: &str) -> Result<(), Failure> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|e| Failure::io(&self.path, e))
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), Failure> {
        self.writer.write_all(bytes).map_err(|e| Failure::io(&self.path, e))
    }

    pub fn write_json<T: serde::Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        let line = serde_json::to_string(value).map_err(|e| Failure::data(e.to_string()))?;
        self.write_line(&line)
    }

    pub fn inner(&mut self) -> &mut BufWriter<NamedTempFile> {
        &mut self.writer
    }
}

/// One non-empty line of an input file.
pub struct Line {
    /// 1-based line number in the file.
    pub number: u64,
    /// Position among the non-empty lines, from 0.
    pub ordinal: u64,
    pub text: String,
}

/// Non-empty lines of a UTF-8 file, without terminators.
pub struct Lines<R> {
    path: PathBuf,
    reader: R,
    buf: Vec<u8>,
    number: u64,
    ordinal: u64,
}

impl Lines<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, Failure> {
        Ok(Lines { path: path.to_path_buf(), reader: open(path)?, buf: Vec::new(), number: 0, ordinal: 0 })
    }
}

impl<R: BufRead> Iterator for Lines<R> {
    type Item = Result<Line, Failure>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Failure::io(&self.path, e))),
            }
            self.number += 1;
            let bytes = trim_newline(&self.buf);
            if bytes.is_empty() {
                continue;
            }
            let text = match std::str::from_utf8(bytes) {
                Ok(t) => t.to_string(),
                Err(_) => {
                    return Some(Err(Failure::data(format!(
                        "{}:{}: input is not valid UTF-8",
                        self.path.display(),
                        self.number
                    ))))
                }
            };
            let ordinal = self.ordinal;
            self.ordinal += 1;
            return Some(Ok(Line { number: self.number, ordinal, text }));
        }
    }
}

pub fn trim_newline(bytes: &[u8]) -> &[u8] {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    bytes.strip_suffix(b"\r").unwrap_or(bytes)
}

/// Counts and quotes skipped records; in strict mode the first one is fatal.
#[derive(Debug, Default)]
pub struct Rejects {
    strict: bool,
    pub count: u64,
    pub first: Vec<String>,
}

impl Rejects {
    pub fn new(strict: bool) -> Self {
        Rejects { strict, ..Default::default() }
    }

    pub fn reject(&mut self, path: &Path, line: u64, reason: impl std::fmt::Display) -> Result<(), Failure> {
        let message = format!("{}:{line}: {reason}", path.display());
        if self.strict {
            return Err(Failure::data(message));
        }
        self.count += 1;
        if self.first.len() < KEPT_ERRORS {
            self.first.push(message);
        }
        Ok(())
    }
}

pub fn parse_record<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// Runs `f` over `items` on the pool in fixed-size chunks and hands the
/// results to `sink` in input order, so output never depends on the number
/// of workers.
pub fn par_map_ordered<T, U, I, F, S>(pool: &ThreadPool, mut items: I, f: F, mut sink: S) -> Result<(), Failure>
where
    I: Iterator<Item = Result<T, Failure>>,
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync,
    S: FnMut(U) -> Result<(), Failure>,
{
    loop {
        let chunk = items.by_ref().take(CHUNK).collect::<Result<Vec<T>, Failure>>()?;
        if chunk.is_empty() {
            return Ok(());
        }
        let done = chunk.len() < CHUNK;
        let results: Vec<U> = pool.install(|| chunk.into_par_iter().map(&f).collect());
        for r in results {
            sink(r)?;
        }
        if done {
            return Ok(());
        }
    }
}
