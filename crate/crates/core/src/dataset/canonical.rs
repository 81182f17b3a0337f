//! Canonical on-disk form: a comma-separated table (missing = empty cell)
//! plus a `key = value` sidecar carrying the clock, units and names.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::tabular::{parse_cell, read_text};
use super::{TargetSeries, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::textfmt::{fmt_f64, parse_key_values};

const FORMAT: &str = "calibench-dataset-v1";

/// `data.csv` -> `data.meta`
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

pub fn write_canonical(ds: &TimeSeriesDataset, csv: impl AsRef<Path>) -> Result<PathBuf> {
    let csv = csv.as_ref();
    let mut table = String::new();
    table.push_str("index");
    for n in ds.channel_names().iter().chain(ds.targets().iter().map(|t| &t.name)) {
        table.push(',');
        table.push_str(n);
    }
    table.push('\n');
    for t in 0..ds.len() {
        write!(table, "{t}").unwrap();
        let row = ds.channels().row(t).iter();
        for &v in row.chain(ds.targets().iter().map(|tg| &tg.values[t])) {
            table.push(',');
            if !v.is_nan() {
                table.push_str(&fmt_f64(v));
            }
        }
        table.push('\n');
    }
    std::fs::write(csv, table).map_err(|e| Error::io(csv, e))?;

    let join = |v: &[String]| v.join(",");
    let mut meta = String::new();
    writeln!(meta, "format = {FORMAT}").unwrap();
    writeln!(meta, "name = {}", ds.name).unwrap();
    writeln!(meta, "sampling_period = {}", fmt_f64(ds.sampling_period)).unwrap();
    writeln!(meta, "start_time = {}", ds.start_time.as_deref().unwrap_or("")).unwrap();
    writeln!(meta, "rows = {}", ds.len()).unwrap();
    writeln!(meta, "channels = {}", join(ds.channel_names())).unwrap();
    writeln!(meta, "channel_units = {}", join(ds.channel_units())).unwrap();
    let tnames: Vec<String> = ds.targets().iter().map(|t| t.name.clone()).collect();
    let tunits: Vec<String> = ds.targets().iter().map(|t| t.unit.clone()).collect();
    writeln!(meta, "targets = {}", join(&tnames)).unwrap();
    writeln!(meta, "target_units = {}", join(&tunits)).unwrap();
    writeln!(meta, "missing = empty cell").unwrap();
    let meta_path = metadata_path(csv);
    std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
    Ok(meta_path)
}

pub fn load_canonical(csv: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let csv = csv.as_ref();
    let meta_path = metadata_path(csv);
    let meta_text = read_text(&meta_path)?;
    let meta = parse_key_values(&meta_text)?;
    let get = |k: &str| {
        meta.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Schema(format!("metadata lacks {k}")))
    };
    if get("format")? != FORMAT {
        return Err(Error::Schema(format!("unsupported dataset format {}", get("format")?)));
    }
    let list = |k: &str| -> Result<Vec<String>> {
        let v = get(k)?;
        Ok(if v.is_empty() {
            Vec::new()
        } else {
            v.split(',').map(str::to_string).collect()
        })
    };
    let channels = list("channels")?;
    let channel_units = list("channel_units")?;
    let target_names = list("targets")?;
    let target_units = list("target_units")?;
    let rows: usize = get("rows")?
        .parse()
        .map_err(|_| Error::Schema("bad rows entry".into()))?;
    let period: f64 = get("sampling_period")?
        .parse()
        .map_err(|_| Error::Schema("bad sampling_period entry".into()))?;

    let text = read_text(csv)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Empty("empty table".into()))?;
    let width = 1 + channels.len() + target_names.len();
    if header.split(',').count() != width {
        return Err(Error::Schema("table header does not match metadata".into()));
    }
    let d = channels.len();
    let mut data = Vec::with_capacity(rows * d);
    let mut targets = vec![Vec::with_capacity(rows); target_names.len()];
    let mut seen = 0;
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let ln = i + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(Error::parse(ln, format!("expected {width} fields")));
        }
        for (k, c) in cells[1..].iter().enumerate() {
            let v = parse_cell(c, false, ln)?.unwrap_or(f64::NAN);
            if k < d {
                data.push(v);
            } else {
                targets[k - d].push(v);
            }
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Structure(format!("metadata says {rows} rows, table has {seen}")));
    }
    let start = get("start_time").ok().filter(|s| !s.is_empty()).map(str::to_string);
    Ok(TimeSeriesDataset::new(
        get("name")?,
        period,
        channels,
        channel_units,
        Matrix::from_vec(rows, d, data)?,
        target_names
            .into_iter()
            .zip(target_units)
            .zip(targets)
            .map(|((n, u), v)| TargetSeries::new(n, u, v))
            .collect(),
    )?
    .with_start_time(start))
}
