//! Append-only per-cell trial logs.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MethodKind;

pub const TRIALS_FILE: &str = "trials.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Full,
    Coarse,
    Refine,
}

/// One fit/evaluate run. Errors are in target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: MethodKind,
    pub split: String,
    pub tsl: usize,
    /// Window label as configured, `-` for the reservoir model.
    pub tdl: String,
    pub tdl_seconds: f64,
    pub taps: usize,
    pub tuple: String,
    pub rep: usize,
    pub seed: u64,
    pub stage: Stage,
    pub status: TrialStatus,
    pub val_mae: f64,
    pub test_mae: f64,
    pub test_std_abs_err: f64,
    pub test_relative_mae: f64,
    pub n_val: usize,
    pub n_test: usize,
    pub n_test_skipped: usize,
    pub stored: usize,
    pub n_sv: usize,
    pub message: String,
    pub duration_ms: u64,
}

impl TrialRecord {
    /// Identity of the trial within an experiment.
    pub fn key(&self) -> TrialKey {
        TrialKey {
            method: self.method,
            split: self.split.clone(),
            tdl: self.tdl.clone(),
            tuple: self.tuple.clone(),
            rep: self.rep,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialKey {
    pub method: MethodKind,
    pub split: String,
    pub tdl: String,
    pub tuple: String,
    pub rep: usize,
}

/// Directory name of a `(method, split, window)` cell.
pub fn cell_dir_name(method: MethodKind, split: &str, tdl: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
    };
    let tdl = if tdl == "-" { "seq".to_string() } else { clean(tdl) };
    format!("{}_{}_{}", method, clean(split), tdl)
}

/// Reads a trial log. A malformed final line (interrupted write) is
/// dropped; malformed lines elsewhere are an error.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let complete = text.ends_with('\n');
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    let rows: Vec<_> = rdr.deserialize::<TrialRecord>().collect();
    let n = rows.len();
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Ok(rec) if i + 1 < n || complete => out.push(rec),
            Ok(_) => {}
            Err(_) if i + 1 == n => {}
            Err(e) => return Err(Error::parse(i + 2, format!("{}: {e}", path.display()))),
        }
    }
    Ok(out)
}

/// Appends records, writing the header when the file is new.
pub struct RecordWriter {
    path: PathBuf,
    file: File,
}

impl RecordWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = !path.exists() || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        if !fresh {
            // drop a torn final line so the next record starts on its own line
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            if !text.ends_with('\n') {
                let keep = text.rfind('\n').map_or(0, |i| i + 1);
                file = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
                file.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
                file = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
            }
        }
        let mut w = Self { path: path.to_path_buf(), file };
        if fresh {
            let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
            wtr.serialize(dummy()).map_err(|e| Error::Config(e.to_string()))?;
            let bytes = wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            let header = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
            w.write_bytes(header)?;
            w.write_bytes(b"\n")?;
        }
        Ok(w)
    }

    fn write_bytes(&mut self, b: &[u8]) -> Result<()> {
        self.file.write_all(b).map_err(|e| Error::io(&self.path, e))
    }

    pub fn append(&mut self, r: &TrialRecord) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        wtr.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
        let bytes = wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        self.write_bytes(&bytes)?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn dummy() -> TrialRecord {
    TrialRecord {
        method: MethodKind::Mlr,
        split: String::new(),
        tsl: 0,
        tdl: String::new(),
        tdl_seconds: 0.0,
        taps: 0,
        tuple: String::new(),
        rep: 0,
        seed: 0,
        stage: Stage::Full,
        status: TrialStatus::Ok,
        val_mae: 0.0,
        test_mae: 0.0,
        test_std_abs_err: 0.0,
        test_relative_mae: 0.0,
        n_val: 0,
        n_test: 0,
        n_test_skipped: 0,
        stored: 0,
        n_sv: 0,
        message: String::new(),
        duration_ms: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rep: usize, val: f64) -> TrialRecord {
        TrialRecord {
            rep,
            val_mae: val,
            tuple: "hidden=3;epochs=100".into(),
            message: "a, \"quoted\" message".into(),
            ..dummy()
        }
    }

    #[test]
    fn append_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(TRIALS_FILE);
        let mut w = RecordWriter::open(&p).unwrap();
        w.append(&rec(0, 0.1)).unwrap();
        w.append(&rec(1, 1.0 / 3.0)).unwrap();
        drop(w);
        let mut w = RecordWriter::open(&p).unwrap();
        w.append(&rec(2, f64::NAN)).unwrap();
        let back = read_records(&p).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[1], rec(1, 1.0 / 3.0));
        assert!(back[2].val_mae.is_nan());
    }

    #[test]
    fn torn_last_line_is_ignored_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(TRIALS_FILE);
        let mut w = RecordWriter::open(&p).unwrap();
        w.append(&rec(0, 0.5)).unwrap();
        drop(w);
        let mut f = OpenOptions::new().append(true).open(&p).unwrap();
        f.write_all(b"mlr,504-168").unwrap();
        drop(f);
        assert_eq!(read_records(&p).unwrap().len(), 1);
        let mut w = RecordWriter::open(&p).unwrap();
        w.append(&rec(1, 0.25)).unwrap();
        assert_eq!(read_records(&p).unwrap().len(), 2);
    }

    #[test]
    fn cell_names() {
        assert_eq!(cell_dir_name(MethodKind::Svr, "504-168-7002", "0.33min"), "svr_504-168-7002_0.33min");
        assert_eq!(cell_dir_name(MethodKind::Esn, "1-2-3", "-"), "esn_1-2-3_seq");
    }
}
