//! Trial log format.
//!
//! A trial is persisted as a CSV of 200 Hz samples plus a JSON sidecar with
//! the trial metadata. CSV columns, in order:
//!
//! ```text
//! t, lx,ly,lz, rx,ry,rz, flx,fly,flz, frx,fry,frz,
//! golx,goly,golz, gorx,gory,gorz, cx,cy,cz, phase, event
//! ```
//!
//! `l*`/`r*` are end-effector positions, `fl*`/`fr*` rendered forces,
//! `gol*`/`gor*` god-object positions and `c*` the cube center. `event` is
//! one of `none`, `placed`, `break`, `slip`.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::TrialPhase;
use crate::haptics::FailureEvent;
use crate::world::{Material, Side, TargetLabel, Vec3};

pub const LOG_RATE_HZ: f64 = 200.0;
pub const META_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 24] = [
    "t", "lx", "ly", "lz", "rx", "ry", "rz", "flx", "fly", "flz", "frx", "fry", "frz", "golx", "goly",
    "golz", "gorx", "gory", "gorz", "cx", "cy", "cz", "phase", "event",
];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("metadata error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed log {path} line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

/// Audible cue emitted by the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cue {
    None,
    Placed,
    Broke,
    Slipped,
}

impl Cue {
    pub fn as_str(self) -> &'static str {
        match self {
            Cue::None => "none",
            Cue::Placed => "placed",
            Cue::Broke => "break",
            Cue::Slipped => "slip",
        }
    }
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Cue::None),
            "placed" => Ok(Cue::Placed),
            "break" => Ok(Cue::Broke),
            "slip" => Ok(Cue::Slipped),
            other => Err(format!("unknown event `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub ee: [Vec3; 2],
    pub force: [Vec3; 2],
    pub go: [Vec3; 2],
    pub cube: Vec3,
    pub phase: TrialPhase,
    pub event: Cue,
}

impl LogRow {
    pub fn lateral_force(&self, side: Side) -> f64 {
        self.force[side.index()].x.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueRecord {
    pub cue: Cue,
    pub t: f64,
}

/// Peak joint torques and saturation counts per arm (left, right).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TorqueSummary {
    pub peak_abs: [[f64; 4]; 2],
    pub saturated_ticks: [[u64; 4]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub version: u32,
    pub trial_index: usize,
    pub material: Material,
    pub target: TargetLabel,
    pub seed: u64,
    pub success: bool,
    /// The input source stopped before the trial finished.
    pub incomplete: bool,
    /// Warm-up trial, excluded from metrics.
    pub familiarization: bool,
    pub dt_log: f64,
    pub dt_physics: f64,
    pub width0: f64,
    pub final_phase: TrialPhase,
    pub cues: Vec<CueRecord>,
    pub failures: Vec<FailureEvent>,
    pub torques: Option<TorqueSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub meta: TrialMeta,
    pub rows: Vec<LogRow>,
}

impl TrialLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positions(&self, side: Side) -> Vec<Vec3> {
        self.rows.iter().map(|r| r.ee[side.index()]).collect()
    }

    pub fn lateral_forces(&self, side: Side) -> Vec<f64> {
        self.rows.iter().map(|r| r.lateral_force(side)).collect()
    }

    /// End-effector velocity by backward differences at the log rate.
    pub fn ee_velocity(&self, side: Side) -> Vec<Vec3> {
        let p = self.positions(side);
        let mut v = vec![Vec3::zeros(); p.len()];
        for i in 1..p.len() {
            v[i] = (p[i] - p[i - 1]) / self.meta.dt_log;
        }
        v
    }

    pub fn first_break(&self) -> Option<&FailureEvent> {
        self.meta
            .failures
            .iter()
            .find(|e| e.kind == crate::haptics::FailureKind::Break)
    }

    /// File stem used when persisting this trial.
    pub fn stem(&self) -> String {
        format!(
            "trial_{:03}_{}_{}",
            self.meta.trial_index, self.meta.material.id, self.meta.target
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let mut rec: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        for r in &self.rows {
            rec.clear();
            rec.push(r.t.to_string());
            for v in r.ee.iter().chain(&r.force).chain(&r.go).chain(std::iter::once(&r.cube)) {
                rec.extend(v.iter().map(|c| c.to_string()));
            }
            rec.push(r.phase.as_str().to_string());
            rec.push(r.event.as_str().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf, LogError> {
        fs::create_dir_all(dir).map_err(|source| LogError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let csv_path = dir.join(format!("{}.csv", self.stem()));
        let file = File::create(&csv_path).map_err(|source| LogError::Io {
            path: csv_path.clone(),
            source,
        })?;
        self.write_csv(BufWriter::new(file)).map_err(|source| LogError::Csv {
            path: csv_path.clone(),
            source,
        })?;
        let json_path = csv_path.with_extension("json");
        let json = serde_json::to_string_pretty(&self.meta).map_err(|source| LogError::Json {
            path: json_path.clone(),
            source,
        })?;
        fs::write(&json_path, json + "\n").map_err(|source| LogError::Io {
            path: json_path,
            source,
        })?;
        Ok(csv_path)
    }

    /// Load a trial from its CSV path; the sidecar is expected next to it.
    pub fn read(csv_path: &Path) -> Result<TrialLog, LogError> {
        let json_path = csv_path.with_extension("json");
        let text = fs::read_to_string(&json_path).map_err(|source| LogError::Io {
            path: json_path.clone(),
            source,
        })?;
        let meta: TrialMeta = serde_json::from_str(&text).map_err(|source| LogError::Json {
            path: json_path,
            source,
        })?;
        let file = File::open(csv_path).map_err(|source| LogError::Io {
            path: csv_path.to_path_buf(),
            source,
        })?;
        let rows = read_rows(file, csv_path)?;
        Ok(TrialLog { meta, rows })
    }
}

pub fn read_rows<R: std::io::Read>(input: R, path: &Path) -> Result<Vec<LogRow>, LogError> {
    let malformed = |line: usize, reason: String| LogError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|source| LogError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(malformed(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|source| LogError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if rec.len() != CSV_HEADER.len() {
            return Err(malformed(line, format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len())));
        }
        let num = |k: usize| -> Result<f64, LogError> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| malformed(line, format!("column {}: {e}", CSV_HEADER[k])))
        };
        let v3 = |k: usize| -> Result<Vec3, LogError> { Ok(Vec3::new(num(k)?, num(k + 1)?, num(k + 2)?)) };
        let t = num(0)?;
        if !(t > last_t) {
            return Err(malformed(line, "time is not increasing".into()));
        }
        last_t = t;
        let phase = rec[22].parse::<TrialPhase>().map_err(|e| malformed(line, e))?;
        let event = rec[23].parse::<Cue>().map_err(|e| malformed(line, e))?;
        rows.push(LogRow {
            t,
            ee: [v3(1)?, v3(4)?],
            force: [v3(7)?, v3(10)?],
            go: [v3(13)?, v3(16)?],
            cube: v3(19)?,
            phase,
            event,
        });
    }
    Ok(rows)
}

/// All trial CSVs in `dir`, sorted by file name.
pub fn list_trials(dir: &Path) -> Result<Vec<PathBuf>, LogError> {
    let entries = fs::read_dir(dir).map_err(|source| LogError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("trial_"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}
