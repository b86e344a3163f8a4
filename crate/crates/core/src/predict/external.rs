//! Newline-delimited JSON over a subprocess's stdin/stdout.
//!
//! Requests are `{"id": ..., "path": ...}`, responses `{"id": ..., "score": ...}`.
//! Closing stdin tells the process to finish; it must then exit with status 0.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;

use serde::{Deserialize, Serialize};

use super::Score;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSpec {
    pub model_id: String,
    /// Executable followed by its arguments.
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub id: String,
    pub score: f64,
}

/// Runs one subprocess for the whole batch and matches responses by id.
///
/// Results come back in request order.
pub fn external_predict(requests: &[PredictRequest], spec: &ExternalSpec) -> Result<Vec<Score>> {
    let (program, args) = spec
        .command
        .split_first()
        .ok_or_else(|| Error::Config(format!("predictor {}: empty command", spec.model_id)))?;
    let mut wanted = HashSet::with_capacity(requests.len());
    for r in requests {
        if !wanted.insert(r.id.as_str()) {
            return Err(Error::Protocol(format!("duplicate request id {}", r.id)));
        }
    }

    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::io(program, e))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");

    let lines: Vec<String> = requests
        .iter()
        .map(|r| serde_json::to_string(r).expect("request serializes"))
        .collect();
    // a separate writer keeps a child that answers line-by-line from blocking on a full pipe
    let writer = thread::spawn(move || -> std::io::Result<()> {
        let mut w = BufWriter::new(stdin);
        for line in lines {
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    });

    let mut scores: HashMap<String, f64> = HashMap::with_capacity(requests.len());
    let mut failure = None;
    for (n, line) in BufReader::new(stdout).lines().enumerate() {
        let lineno = n + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                failure = Some(Error::Protocol(format!("line {lineno}: unreadable output: {e}")));
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse_response(&line, lineno, &wanted, &scores) {
            Ok(resp) => {
                scores.insert(resp.id, resp.score);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if failure.is_some() {
        let _ = child.kill();
    }
    let status = child.wait().map_err(|e| Error::io(program, e))?;
    // a broken pipe only matters when the child otherwise succeeded
    let write_result = writer.join().unwrap_or_else(|_| Ok(()));
    if let Some(e) = failure {
        return Err(e);
    }
    if !status.success() {
        return Err(Error::Protocol(format!(
            "predictor {} exited with {status}",
            spec.model_id
        )));
    }
    if let Err(e) = write_result {
        return Err(Error::Protocol(format!("writing requests failed: {e}")));
    }
    requests
        .iter()
        .map(|r| {
            scores
                .get(&r.id)
                .map(|&value| Score {
                    tile_id: r.id.clone(),
                    model_id: spec.model_id.clone(),
                    value,
                })
                .ok_or_else(|| Error::Protocol(format!("no response for id {}", r.id)))
        })
        .collect()
}

fn parse_response(
    line: &str,
    lineno: usize,
    wanted: &HashSet<&str>,
    seen: &HashMap<String, f64>,
) -> Result<PredictResponse> {
    let resp: PredictResponse = serde_json::from_str(line)
        .map_err(|e| Error::Protocol(format!("line {lineno}: malformed response {line:?}: {e}")))?;
    if !wanted.contains(resp.id.as_str()) {
        return Err(Error::Protocol(format!("line {lineno}: unknown id {}", resp.id)));
    }
    if seen.contains_key(&resp.id) {
        return Err(Error::Protocol(format!("line {lineno}: duplicate id {}", resp.id)));
    }
    if !(resp.score.is_finite() && (0.0..=1.0).contains(&resp.score)) {
        return Err(Error::Protocol(format!(
            "line {lineno}: score {} outside [0, 1]",
            resp.score
        )));
    }
    Ok(resp)
}
