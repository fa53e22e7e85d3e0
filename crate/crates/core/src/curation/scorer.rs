use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::record::ImageRecord;
use super::scan::load_rgb;
use crate::error::{Error, Result};
use crate::metrics::luma;

pub const RESPONSE_TIMEOUT: Duration = Duration::from_secs(30);
pub const MAX_RETRIES: u32 = 2;

/// Where aesthetic scores come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScorerSpec {
    /// JSON-lines of `{"path": .., "score": ..}` keyed by corpus-relative path.
    ScoreFile { location: PathBuf },
    /// Shell command speaking the line protocol on stdin/stdout.
    Subprocess { location: String },
    /// Colorfulness + RMS contrast. Not a model of human aesthetic judgement.
    Heuristic,
}

impl ScorerSpec {
    /// Parses `score-file:<path>`, `subprocess:<command>` or `heuristic`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "heuristic" {
            return Ok(ScorerSpec::Heuristic);
        }
        match s.split_once(':') {
            Some(("score-file", loc)) if !loc.is_empty() => Ok(ScorerSpec::ScoreFile { location: loc.into() }),
            Some(("subprocess", loc)) if !loc.trim().is_empty() => Ok(ScorerSpec::Subprocess { location: loc.into() }),
            _ => Err(Error::invalid(format!(
                "bad scorer '{s}', expected heuristic, score-file:<path> or subprocess:<command>"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreLine {
    path: String,
    score: f64,
}

pub fn read_score_file(path: &Path) -> Result<HashMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: ScoreLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if map.insert(s.path.clone(), s.score).is_some() {
            warn!("score file lists {} more than once, keeping the last", s.path);
        }
    }
    Ok(map)
}

/// Hasler-Susstrunk colorfulness of packed RGB8.
pub fn colorfulness(rgb: &[u8]) -> f64 {
    let n = (rgb.len() / 3) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (mut s_rg, mut s_yb, mut q_rg, mut q_yb) = (0.0, 0.0, 0.0, 0.0);
    for p in rgb.chunks_exact(3) {
        let (r, g, b) = (f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
        let rg = r - g;
        let yb = 0.5 * (r + g) - b;
        s_rg += rg;
        s_yb += yb;
        q_rg += rg * rg;
        q_yb += yb * yb;
    }
    let (m_rg, m_yb) = (s_rg / n, s_yb / n);
    let v_rg = (q_rg / n - m_rg * m_rg).max(0.0);
    let v_yb = (q_yb / n - m_yb * m_yb).max(0.0);
    (v_rg + v_yb).sqrt() + 0.3 * (m_rg * m_rg + m_yb * m_yb).sqrt()
}

/// Standard deviation of luma.
pub fn rms_contrast(rgb: &[u8]) -> f64 {
    let n = (rgb.len() / 3) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ys: Vec<f64> = rgb.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    let mean = ys.iter().sum::<f64>() / n;
    (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Score in [0, 10]: `5 min(C/100, 1) + 5 min(rms/64, 1)`.
pub fn heuristic_score(rgb: &[u8]) -> f64 {
    5.0 * (colorfulness(rgb) / 100.0).min(1.0) + 5.0 * (rms_contrast(rgb) / 64.0).min(1.0)
}

struct Running {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn shutdown(mut self, grace: Duration) {
        drop(self.stdin.take());
        let deadline = Instant::now() + grace;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => {
                    if !status.success() {
                        debug!("scorer exited with {status}");
                    }
                    break;
                }
                Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
    }
}

enum Failure {
    Crashed(String),
    TimedOut,
    BadResponse(String),
}

/// Client for an external scorer process. One request in flight at a time;
/// the child is restarted after a crash, a timeout or a bad response.
pub struct SubprocessScorer {
    command: String,
    timeout: Duration,
    retries: u32,
    running: Option<Running>,
}

#[derive(Serialize)]
struct Request<'a> {
    path: &'a str,
}

#[derive(Deserialize)]
struct Response {
    path: String,
    score: f64,
}

impl SubprocessScorer {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: RESPONSE_TIMEOUT,
            retries: MAX_RETRIES,
            running: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    fn spawn(&self) -> Result<Running> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::ScorerUnavailable(format!("cannot start '{}': {e}", self.command)))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        // Detached: a killed shell may leave a grandchild holding the pipe.
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines: rx,
        })
    }

    fn attempt(&mut self, path: &str) -> Result<std::result::Result<f64, Failure>> {
        if self.running.is_none() {
            self.running = Some(self.spawn()?);
        }
        let run = self.running.as_mut().expect("running");
        let mut line = serde_json::to_string(&Request { path }).expect("request serializes");
        line.push('\n');
        let stdin = run.stdin.as_mut().expect("stdin open");
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            return Ok(Err(Failure::Crashed(format!("write failed: {e}"))));
        }
        Ok(match run.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => match serde_json::from_str::<Response>(&reply) {
                Ok(r) if r.path == path && r.score.is_finite() => Ok(r.score),
                Ok(r) if r.path != path => Err(Failure::BadResponse(format!("reply for '{}'", r.path))),
                Ok(_) => Err(Failure::BadResponse("non-finite score".into())),
                Err(e) => Err(Failure::BadResponse(format!("{e}: {reply}"))),
            },
            Ok(Err(e)) => Err(Failure::Crashed(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Disconnected) => Err(Failure::Crashed("closed stdout".into())),
            Err(RecvTimeoutError::Timeout) => Err(Failure::TimedOut),
        })
    }

    /// Score for `path`, or `None` if the scorer kept timing out or answering
    /// badly. A scorer that keeps crashing is `ScorerUnavailable`.
    pub fn score(&mut self, path: &str) -> Result<Option<f64>> {
        let mut last = Failure::TimedOut;
        for attempt in 0..=self.retries {
            match self.attempt(path)? {
                Ok(s) => return Ok(Some(s)),
                Err(f) => {
                    let why = match &f {
                        Failure::Crashed(m) => format!("crashed ({m})"),
                        Failure::TimedOut => format!("no reply within {:?}", self.timeout),
                        Failure::BadResponse(m) => format!("bad reply ({m})"),
                    };
                    warn!("scorer attempt {} for {path}: {why}", attempt + 1);
                    if let Some(run) = self.running.take() {
                        run.shutdown(Duration::ZERO);
                    }
                    last = f;
                }
            }
        }
        match last {
            Failure::Crashed(m) => Err(Error::ScorerUnavailable(format!(
                "'{}' failed {} times: {m}",
                self.command,
                self.retries + 1
            ))),
            _ => Ok(None),
        }
    }
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        if let Some(run) = self.running.take() {
            run.shutdown(Duration::from_secs(5));
        }
    }
}

/// Fills `metrics.aesthetic` on every record with metrics. Records the scorer
/// cannot score are left without a score. Returns the number left unscored.
pub fn aesthetic_score(records: &mut [ImageRecord], root: &Path, spec: &ScorerSpec) -> Result<usize> {
    let mut unscored = 0;
    let mut set = |r: &mut ImageRecord, s: Option<f64>| {
        match r.metrics.as_mut() {
            Some(m) => m.aesthetic = s,
            None => {
                warn!("{} has no metrics, cannot attach a score", r.path);
                unscored += 1;
                return;
            }
        }
        if s.is_none() {
            unscored += 1;
        }
    };
    match spec {
        ScorerSpec::ScoreFile { location } => {
            let map = read_score_file(location)?;
            for r in records.iter_mut() {
                let s = map.get(&r.path).copied();
                if s.is_none() {
                    warn!("no score for {}", r.path);
                }
                set(r, s);
            }
        }
        ScorerSpec::Subprocess { location } => {
            let mut client = SubprocessScorer::new(location.clone());
            for r in records.iter_mut() {
                let abs = root.join(&r.path);
                let s = client.score(&abs.to_string_lossy())?;
                set(r, s);
            }
        }
        ScorerSpec::Heuristic => {
            for r in records.iter_mut() {
                let s = match load_rgb(&root.join(&r.path)) {
                    Ok((rgb, _, _)) => Some(heuristic_score(&rgb)),
                    Err(e) => {
                        warn!("cannot score {}: {e}", r.path);
                        None
                    }
                };
                set(r, s);
            }
        }
    }
    if unscored > 0 {
        warn!("{unscored} record(s) unscored, excluded from the aesthetic subset");
    }
    Ok(unscored)
}
