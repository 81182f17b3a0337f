//! Schema-driven loader for arbitrary delimited files (e.g. SNAQ-style
//! deployments, where the reference is only available on a subset of rows).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tabular::{parse_cell, parse_timestamp, read_text, Delimiter};
use super::{regular_slots, scatter_rows, TargetSeries, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Timestamp,
    Sensor,
    Target,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    #[serde(default)]
    pub unit: String,
}

/// Column-role map plus the clock and missing-value conventions of a file.
///
/// ```toml
/// sampling_period = 20.0
/// missing_sentinel = -999.0
///
/// [[columns]]
/// name = "time"
/// role = "timestamp"
///
/// [[columns]]
/// name = "no2_a"
/// role = "sensor"
/// unit = "ppb"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericSchema {
    #[serde(default)]
    pub name: Option<String>,
    pub sampling_period: f64,
    #[serde(default)]
    pub missing_sentinel: Option<f64>,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default)]
    pub decimal_comma: bool,
    /// chrono format string; numeric seconds and common ISO layouts are
    /// accepted when absent.
    #[serde(default)]
    pub time_format: Option<String>,
    pub columns: Vec<ColumnSpec>,
}

fn default_delimiter() -> String {
    "auto".into()
}

impl GenericSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("schema: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sampling_period > 0.0) {
            return Err(Error::Config("schema sampling_period must be positive".into()));
        }
        let stamps = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Timestamp)
            .count();
        if stamps != 1 {
            return Err(Error::Schema(format!(
                "schema needs exactly one timestamp column, has {stamps}"
            )));
        }
        if !self.columns.iter().any(|c| c.role == ColumnRole::Sensor) {
            return Err(Error::Schema("schema declares no sensor column".into()));
        }
        Ok(())
    }
}

pub fn load_generic_csv(path: impl AsRef<Path>, schema: &GenericSchema) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let name = schema.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "generic".into())
    });
    parse_generic(&text, schema, &name)
}

pub(crate) fn parse_generic(text: &str, schema: &GenericSchema, name: &str) -> Result<TimeSeriesDataset> {
    schema.validate()?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Empty("file has no header".into()))?;
    let delim = Delimiter::parse(&schema.delimiter)?.unwrap_or_else(|| Delimiter::detect(header));
    let headers: Vec<String> = delim
        .split(header)
        .into_iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect();

    for h in &headers {
        if !schema.columns.iter().any(|c| &c.name == h) {
            return Err(Error::Schema(format!("file column {h:?} is not in the schema")));
        }
    }
    let position = |c: &ColumnSpec| {
        headers
            .iter()
            .position(|h| h == &c.name)
            .ok_or_else(|| Error::Schema(format!("schema column {:?} not found in file", c.name)))
    };
    let mut time_col = 0;
    let mut sensors = Vec::new();
    let mut targets = Vec::new();
    for c in &schema.columns {
        let pos = position(c)?;
        match c.role {
            ColumnRole::Timestamp => time_col = pos,
            ColumnRole::Sensor => sensors.push((pos, c)),
            ColumnRole::Target => targets.push((pos, c)),
            ColumnRole::Ignore => {}
        }
    }

    let sentinel = schema.missing_sentinel;
    let mut times = Vec::new();
    let mut line_numbers = Vec::new();
    let mut rows = Vec::new();
    let mut start = None;
    for (ln, line) in lines {
        let fields = delim.split(line);
        if fields.len() != headers.len() {
            return Err(Error::parse(
                ln,
                format!("expected {} fields, found {}", headers.len(), fields.len()),
            ));
        }
        if start.is_none() {
            start = Some(fields[time_col].trim_matches('"').to_string());
        }
        times.push(parse_timestamp(fields[time_col], schema.time_format.as_deref(), ln)?);
        line_numbers.push(ln);
        let mut row = Vec::with_capacity(sensors.len() + targets.len());
        for (pos, _) in sensors.iter().chain(&targets) {
            let v = parse_cell(fields[*pos], schema.decimal_comma, ln)?
                .filter(|&v| Some(v) != sentinel)
                .unwrap_or(f64::NAN);
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("file has no data rows".into()));
    }
    let width = sensors.len() + targets.len();
    let slots = regular_slots(&times, schema.sampling_period, &line_numbers)?;
    let rows = scatter_rows(rows, &slots, width);
    let d = sensors.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    let mut target_values = vec![Vec::with_capacity(rows.len()); targets.len()];
    for row in &rows {
        data.extend_from_slice(&row[..d]);
        for (k, t) in target_values.iter_mut().enumerate() {
            t.push(row[d + k]);
        }
    }
    Ok(TimeSeriesDataset::new(
        name,
        schema.sampling_period,
        sensors.iter().map(|(_, c)| c.name.clone()).collect(),
        sensors.iter().map(|(_, c)| c.unit.clone()).collect(),
        Matrix::from_vec(rows.len(), d, data)?,
        targets
            .iter()
            .zip(target_values)
            .map(|((_, c), v)| TargetSeries::new(c.name.clone(), c.unit.clone(), v))
            .collect(),
    )?
    .with_start_time(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(sentinel: Option<f64>) -> GenericSchema {
        GenericSchema {
            name: None,
            sampling_period: 20.0,
            missing_sentinel: sentinel,
            delimiter: "auto".into(),
            decimal_comma: false,
            time_format: None,
            columns: vec![
                ColumnSpec { name: "time".into(), role: ColumnRole::Timestamp, unit: String::new() },
                ColumnSpec { name: "s1".into(), role: ColumnRole::Sensor, unit: "ppb".into() },
                ColumnSpec { name: "co".into(), role: ColumnRole::Target, unit: "ppb".into() },
            ],
        }
    }

    #[test]
    fn three_columns() {
        let ds = parse_generic("time,s1,co\n0,1.5,3\n20,2.5,4\n", &schema(None), "g").unwrap();
        assert_eq!(ds.n_channels(), 1);
        assert_eq!(ds.targets().len(), 1);
        assert_eq!(ds.channels().column(0), vec![1.5, 2.5]);
    }

    #[test]
    fn sentinel_masks() {
        let ds = parse_generic("time,s1,co\n0,-999,3\n20,2.5,-999\n", &schema(Some(-999.0)), "g").unwrap();
        assert!(ds.is_missing(0, 0));
        assert!(ds.is_missing(1, 1));
        assert!(!ds.is_missing(0, 1));
    }

    #[test]
    fn schema_column_mismatch() {
        assert!(matches!(
            parse_generic("time,s1,extra,co\n0,1,2,3\n", &schema(None), "g"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_generic("time,s1\n0,1\n", &schema(None), "g"),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn duplicate_timestamps() {
        assert!(matches!(
            parse_generic("time,s1,co\n0,1,2\n0,1,2\n", &schema(None), "g"),
            Err(Error::Structure(m)) if m.contains("duplicate")
        ));
    }

    #[test]
    fn toml_schema_parses() {
        let s = GenericSchema::from_toml(
            "sampling_period = 20.0\nmissing_sentinel = -999.0\n[[columns]]\nname = \"t\"\nrole = \"timestamp\"\n[[columns]]\nname = \"a\"\nrole = \"sensor\"\n",
        )
        .unwrap();
        assert_eq!(s.columns[1].role, ColumnRole::Sensor);
        assert_eq!(s.delimiter, "auto");
    }
}
