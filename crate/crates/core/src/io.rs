//! File formats: event CSV (`time,mark`) with a JSON sidecar, flat parameter
//! JSON, fit results as JSON lines.

use crate::estimate::FitResult;
use crate::model::{Event, EventStream, FlockParams, Mark, Rescale, StreamError};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("parameter file: {0}")]
    Schema(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::File {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes `time,mark` rows. Times use the shortest decimal form that
/// round-trips, so a write/read cycle is exact.
pub fn write_events<W: Write>(w: W, events: &[Event]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["time", "mark"])?;
    for e in events {
        w.write_record([e.time.to_string().as_str(), e.mark.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(r: R) -> Result<Vec<Event>, IoError> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.len() < 2 || headers[0].trim() != "time" || headers[1].trim() != "mark" {
        return Err(IoError::Format {
            line: 1,
            msg: format!("expected header time,mark, got {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |msg: String| IoError::Format { line, msg };
        let time: f64 = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| bad(format!("time: {e}")))?;
        let mark: Mark = rec.get(1).unwrap_or("").parse().map_err(bad)?;
        out.push(Event { time, mark });
    }
    Ok(out)
}

/// Everything in an [`EventStream`] except the events, plus free-form
/// provenance from the producer (simulation config, ingest report).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub horizon: f64,
    pub init1: f64,
    pub init2: f64,
    #[serde(default = "one")]
    pub tick1: f64,
    #[serde(default = "one")]
    pub tick2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rescales: Vec<Rescale>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub info: serde_json::Map<String, serde_json::Value>,
}

fn one() -> f64 {
    1.0
}

impl Sidecar {
    pub fn of(stream: &EventStream) -> Self {
        Self {
            horizon: stream.horizon,
            init1: stream.init1,
            init2: stream.init2,
            tick1: stream.tick1,
            tick2: stream.tick2,
            rescales: stream.rescales.clone(),
            info: serde_json::Map::new(),
        }
    }

    pub fn with_info(mut self, key: &str, value: impl Serialize) -> Result<Self, IoError> {
        self.info.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }
}

/// `events.csv` → `events.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_stream(csv_path: &Path, stream: &EventStream, sidecar: &Sidecar) -> Result<Vec<PathBuf>, IoError> {
    write_events(create(csv_path)?, &stream.events)?;
    let side = sidecar_path(csv_path);
    write_json(&side, sidecar)?;
    Ok(vec![csv_path.to_path_buf(), side])
}

pub fn read_stream(csv_path: &Path) -> Result<(EventStream, Sidecar), IoError> {
    let events = read_events(BufReader::new(open(csv_path)?))?;
    let side: Sidecar = read_json(&sidecar_path(csv_path))?;
    let stream = EventStream {
        events,
        horizon: side.horizon,
        init1: side.init1,
        init2: side.init2,
        tick1: side.tick1,
        tick2: side.tick2,
        rescales: side.rescales.clone(),
    };
    stream.validate()?;
    Ok((stream, side))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// Parses a flat 12-key parameter object; unknown or missing keys and
/// non-finite values are schema errors.
pub fn parse_params(text: &str) -> Result<FlockParams, IoError> {
    let p: FlockParams = serde_json::from_str(text).map_err(|e| IoError::Schema(e.to_string()))?;
    if let Some(i) = p.to_array().iter().position(|v| !v.is_finite()) {
        return Err(IoError::Schema(format!("{} is not finite", crate::model::PARAM_NAMES[i])));
    }
    Ok(p)
}

pub fn read_params(path: &Path) -> Result<FlockParams, IoError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    parse_params(&s)
}

pub fn write_params(path: &Path, p: &FlockParams) -> Result<(), IoError> {
    write_json(path, p)
}

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<(), IoError> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Format {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// A fit keyed by the window it came from, as stored in JSON-lines files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledFit {
    pub label: String,
    #[serde(flatten)]
    pub result: FitResult,
}
