//! Loader for the hourly ENEA/Pirelli air-quality archive
//! (`AirQualityUCI.csv` layout).

use std::path::Path;

use super::tabular::{epoch_seconds, parse_cell, parse_date_time, read_text, Delimiter};
use super::{regular_slots, scatter_rows, TargetSeries, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The archive's documented marker for a missing value.
pub const ENEA_MISSING_SENTINEL: f64 = -200.0;

const SAMPLING_PERIOD: f64 = 3600.0;

// (archive header, target name, unit)
const TARGETS: [(&str, &str, &str); 5] = [
    ("CO(GT)", "CO", "mg/m3"),
    ("NMHC(GT)", "NMHC", "ug/m3"),
    ("C6H6(GT)", "C6H6", "ug/m3"),
    ("NOx(GT)", "NOx", "ppb"),
    ("NO2(GT)", "NO2", "ug/m3"),
];

// (archive header, channel name, unit)
const CHANNELS: [(&str, &str, &str); 8] = [
    ("PT08.S1(CO)", "PT08.S1", "ohm"),
    ("PT08.S2(NMHC)", "PT08.S2", "ohm"),
    ("PT08.S3(NOx)", "PT08.S3", "ohm"),
    ("PT08.S4(NO2)", "PT08.S4", "ohm"),
    ("PT08.S5(O3)", "PT08.S5", "ohm"),
    ("T", "T", "degC"),
    ("RH", "RH", "%"),
    ("AH", "AH", "g/m3"),
];

pub fn load_enea_pirelli(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_enea(&text, &dataset_name(path))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "enea-pirelli".into())
}

pub(crate) fn parse_enea(text: &str, name: &str) -> Result<TimeSeriesDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::Empty("ENEA file has no header".into()))?;
    let delim = Delimiter::detect(header);
    let decimal_comma = delim == Delimiter::Semicolon;
    let cols = delim.split(header);
    let find = |name: &str| {
        cols.iter()
            .position(|c| c.trim_matches('"') == name)
            .ok_or_else(|| Error::Schema(format!("ENEA header lacks column {name}")))
    };
    let date_col = find("Date")?;
    let time_col = find("Time")?;
    let target_cols = TARGETS
        .iter()
        .map(|(h, _, _)| find(h))
        .collect::<Result<Vec<_>>>()?;
    let channel_cols = CHANNELS
        .iter()
        .map(|(h, _, _)| find(h))
        .collect::<Result<Vec<_>>>()?;
    let needed = 1 + *target_cols
        .iter()
        .chain(&channel_cols)
        .chain([&date_col, &time_col])
        .max()
        .expect("non-empty column list");

    let mut times = Vec::new();
    let mut line_numbers = Vec::new();
    let mut rows = Vec::new();
    let mut start = None;
    for (ln, line) in lines {
        let fields = delim.split(line);
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if fields.len() < needed {
            return Err(Error::parse(
                ln,
                format!("expected at least {needed} fields, found {}", fields.len()),
            ));
        }
        let dt = parse_date_time(fields[date_col], fields[time_col], ln)?;
        if start.is_none() {
            start = Some(dt.to_string());
        }
        let mut row = Vec::with_capacity(channel_cols.len() + target_cols.len());
        for &c in channel_cols.iter().chain(&target_cols) {
            let v = parse_cell(fields[c], decimal_comma, ln)?
                .filter(|&v| v != ENEA_MISSING_SENTINEL)
                .unwrap_or(f64::NAN);
            row.push(v);
        }
        times.push(epoch_seconds(&dt));
        line_numbers.push(ln);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("ENEA file has no data rows".into()));
    }

    let width = channel_cols.len() + target_cols.len();
    let slots = regular_slots(&times, SAMPLING_PERIOD, &line_numbers)?;
    let rows = scatter_rows(rows, &slots, width);
    let d = channel_cols.len();
    let mut channel_data = Vec::with_capacity(rows.len() * d);
    let mut targets: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); target_cols.len()];
    for row in &rows {
        channel_data.extend_from_slice(&row[..d]);
        for (k, t) in targets.iter_mut().enumerate() {
            t.push(row[d + k]);
        }
    }
    let channels = Matrix::from_vec(rows.len(), d, channel_data)?;
    let targets = TARGETS
        .iter()
        .zip(targets)
        .map(|((_, n, u), v)| TargetSeries::new(*n, *u, v))
        .collect();
    Ok(TimeSeriesDataset::new(
        name,
        SAMPLING_PERIOD,
        CHANNELS.iter().map(|(_, n, _)| n.to_string()).collect(),
        CHANNELS.iter().map(|(_, _, u)| u.to_string()).collect(),
        channels,
        targets,
    )?
    .with_start_time(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Date;Time;CO(GT);PT08.S1(CO);NMHC(GT);C6H6(GT);PT08.S2(NMHC);NOx(GT);PT08.S3(NOx);NO2(GT);PT08.S4(NO2);PT08.S5(O3);T;RH;AH;;";

    #[test]
    fn sentinel_and_decimal_comma() {
        let text = format!(
            "{HEADER}\n10/03/2004;18.00.00;2,6;1360;150;11,9;1046;166;1056;113;1692;1268;13,6;48,9;0,7578;;\n10/03/2004;19.00.00;-200;1292;112;9,4;955;103;1174;92;1559;972;13,3;47,7;0,7255;;\n;;;;;;;;;;;;;;;;\n"
        );
        let ds = parse_enea(&text, "t").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_channels(), 8);
        assert_eq!(ds.targets().len(), 5);
        assert_eq!(ds.target("CO").unwrap().values[0], 2.6);
        assert!(ds.target("CO").unwrap().values[1].is_nan());
        assert_eq!(ds.channels().row(0)[7], 0.7578);
        assert_eq!(ds.start_time.as_deref(), Some("2004-03-10 18:00:00"));
    }

    #[test]
    fn backwards_time_is_structural() {
        let text = format!(
            "{HEADER}\n10/03/2004;19.00.00;1;1;1;1;1;1;1;1;1;1;1;1;1;;\n10/03/2004;18.00.00;1;1;1;1;1;1;1;1;1;1;1;1;1;;\n"
        );
        assert!(matches!(parse_enea(&text, "t"), Err(Error::Structure(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = format!("{HEADER}\n10/03/2004;18.00.00;abc;1;1;1;1;1;1;1;1;1;1;1;1;;\n");
        match parse_enea(&text, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
