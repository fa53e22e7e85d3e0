use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;

use super::manifest::{encode_record, read_manifest_prefix, write_manifest};
use super::record::ImageRecord;
use super::scan::{list_candidates, measure_all, thread_pool};
use crate::error::{Error, Result};
use crate::metrics::MetricConfig;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// Images measured between two appends to the partial manifest.
    pub chunk_size: usize,
    /// Stop after this many chunks, leaving the partial manifest behind.
    pub stop_after_chunks: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            chunk_size: 32,
            stop_after_chunks: None,
        }
    }
}

/// Progress file kept next to the output while a run is in flight.
pub fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Complete { records: usize, resumed: usize },
    Interrupted { done: usize, remaining: usize },
}

/// Computes metrics for every image under `root` and writes the manifest to
/// `out`, sorted by path. Records already present in `<out>.partial` are kept,
/// so an interrupted run picks up where it stopped.
pub fn run_metrics(root: &Path, out: &Path, cfg: &MetricConfig, opts: &RunOptions) -> Result<RunStatus> {
    cfg.validate()?;
    if opts.chunk_size == 0 {
        return Err(Error::invalid("chunk_size must be at least 1"));
    }
    let pool = thread_pool(opts.workers)?;
    let candidates = list_candidates(root)?;
    let partial = partial_path(out);

    let mut done: HashMap<String, ImageRecord> = HashMap::new();
    match fs::read_to_string(&partial) {
        Ok(text) => {
            let (recs, valid) = read_manifest_prefix(&text);
            if valid < text.len() {
                info!("dropping {} trailing byte(s) of {}", text.len() - valid, partial.display());
                let f = OpenOptions::new().write(true).open(&partial).map_err(|e| Error::io(&partial, e))?;
                f.set_len(valid as u64).map_err(|e| Error::io(&partial, e))?;
            }
            for r in recs {
                done.insert(r.path.clone(), r);
            }
            info!("resuming with {} measured record(s)", done.len());
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(Error::io(&partial, e)),
    }
    let known: std::collections::HashSet<&str> = candidates.iter().map(|(rel, _)| rel.as_str()).collect();
    done.retain(|p, _| known.contains(p.as_str()));
    let resumed = done.len();

    let todo: Vec<String> = candidates
        .iter()
        .map(|(rel, _)| rel.clone())
        .filter(|rel| !done.contains_key(rel))
        .collect();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&partial)
        .map_err(|e| Error::io(&partial, e))?;
    let mut attempted = 0;
    for (i, chunk) in todo.chunks(opts.chunk_size).enumerate() {
        if opts.stop_after_chunks.is_some_and(|n| i >= n) {
            return Ok(RunStatus::Interrupted {
                done: done.len(),
                remaining: todo.len() - attempted,
            });
        }
        let recs = measure_all(root, chunk, cfg, &pool)?;
        let mut buf = String::new();
        for r in &recs {
            buf.push_str(&encode_record(r)?);
            buf.push('\n');
        }
        file.write_all(buf.as_bytes()).map_err(|e| Error::io(&partial, e))?;
        file.sync_data().map_err(|e| Error::io(&partial, e))?;
        attempted += chunk.len();
        for r in recs {
            done.insert(r.path.clone(), r);
        }
        info!("measured {}/{}", attempted + resumed, candidates.len());
    }
    drop(file);

    let mut records: Vec<ImageRecord> = done.into_values().collect();
    records.sort_by(|a, b| a.path.cmp(&b.path));
    write_manifest(&records, out)?;
    fs::remove_file(&partial).map_err(|e| Error::io(&partial, e))?;
    Ok(RunStatus::Complete {
        records: records.len(),
        resumed,
    })
}
