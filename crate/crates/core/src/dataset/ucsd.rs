//! Loader for the UCSD dynamic gas mixture recordings: 100 Hz rows of
//! time, two set-point concentrations and 16 sensor conductances,
//! reduced to 1 s means over non-overlapping blocks.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use super::tabular::Delimiter;
use super::{TargetSeries, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Raw rows per 1 s output sample.
pub const UCSD_BLOCK: usize = 100;
const SENSORS: usize = 16;
const FIELDS: usize = 3 + SENSORS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcsdMixture {
    EthyleneCo,
    EthyleneMethane,
}

impl UcsdMixture {
    /// Names of the two set-point columns, in file order.
    fn gases(self) -> [&'static str; 2] {
        match self {
            UcsdMixture::EthyleneCo => ["CO", "Ethylene"],
            UcsdMixture::EthyleneMethane => ["Methane", "Ethylene"],
        }
    }

    pub fn default_target(self) -> &'static str {
        self.gases()[0]
    }
}

impl FromStr for UcsdMixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ethylene_co" => Ok(UcsdMixture::EthyleneCo),
            "ethylene_methane" => Ok(UcsdMixture::EthyleneMethane),
            other => Err(Error::InvalidParameter(format!(
                "unknown UCSD mixture {other:?} (expected ethylene_co or ethylene_methane)"
            ))),
        }
    }
}

pub fn load_ucsd_mixtures(path: impl AsRef<Path>, mixture: UcsdMixture) -> Result<TimeSeriesDataset> {
    load_ucsd_mixtures_blocked(path, mixture, UCSD_BLOCK)
}

/// As [`load_ucsd_mixtures`] with an explicit block length; a trailing
/// partial block is discarded.
pub fn load_ucsd_mixtures_blocked(
    path: impl AsRef<Path>,
    mixture: UcsdMixture,
    block: usize,
) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ucsd".into());
    read_blocks(BufReader::new(file), mixture, block, &name, path)
}

fn read_blocks(
    reader: impl BufRead,
    mixture: UcsdMixture,
    block: usize,
    name: &str,
    path: &Path,
) -> Result<TimeSeriesDataset> {
    if block == 0 {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    let mut delim: Option<Delimiter> = None;
    let mut sums = [0.0f64; FIELDS - 1];
    let mut in_block = 0usize;
    let mut last_time = f64::NEG_INFINITY;
    let mut sensor_rows: Vec<f64> = Vec::new();
    let mut gas = [Vec::new(), Vec::new()];
    let mut values = [0.0f64; FIELDS];

    for (i, line) in reader.lines().enumerate() {
        let ln = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let d = *delim.get_or_insert_with(|| Delimiter::detect(line));
        let mut n = 0;
        let mut numeric = true;
        for f in d.split(line) {
            if f.is_empty() {
                continue;
            }
            if n < FIELDS {
                match f.parse::<f64>() {
                    Ok(v) => values[n] = v,
                    Err(_) => numeric = false,
                }
            }
            n += 1;
        }
        if !numeric {
            if ln == 1 {
                // header; the data rows may use a different separator
                delim = None;
                continue;
            }
            return Err(Error::parse(ln, "non-numeric field"));
        }
        if n != FIELDS {
            return Err(Error::Schema(format!(
                "line {ln}: expected {FIELDS} columns (time, 2 set-points, {SENSORS} sensors), found {n}"
            )));
        }
        if values[0] <= last_time {
            return Err(Error::Structure(format!("non-increasing time at line {ln}")));
        }
        last_time = values[0];
        for (s, v) in sums.iter_mut().zip(&values[1..]) {
            *s += v;
        }
        in_block += 1;
        if in_block == block {
            let inv = block as f64;
            gas[0].push(sums[0] / inv);
            gas[1].push(sums[1] / inv);
            sensor_rows.extend(sums[2..].iter().map(|s| s / inv));
            sums = [0.0; FIELDS - 1];
            in_block = 0;
        }
    }
    let rows = gas[0].len();
    if rows == 0 {
        return Err(Error::Empty(format!("fewer than {block} data rows")));
    }
    let channels = Matrix::from_vec(rows, SENSORS, sensor_rows)?;
    let [g0, g1] = gas;
    let names = mixture.gases();
    TimeSeriesDataset::new(
        name,
        1.0,
        (1..=SENSORS).map(|k| format!("S{k:02}")).collect(),
        vec!["conductance".to_string(); SENSORS],
        channels,
        vec![
            TargetSeries::new(names[0], "ppm", g0),
            TargetSeries::new(names[1], "ppm", g1),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn fixture(rows: usize, value: impl Fn(usize) -> f64) -> String {
        let mut s = String::from("Time (seconds), CO conc (ppm), Ethylene conc (ppm), Sensor readings (16 channels)\n");
        for i in 0..rows {
            s.push_str(&format!("{:.2}", i as f64 * 0.01));
            for _ in 0..18 {
                s.push_str(&format!(" {}", value(i)));
            }
            s.push('\n');
        }
        s
    }

    fn load(text: &str) -> Result<TimeSeriesDataset> {
        read_blocks(Cursor::new(text), UcsdMixture::EthyleneCo, UCSD_BLOCK, "t", Path::new("t"))
    }

    #[test]
    fn constant_input_averages_to_constant() {
        let ds = load(&fixture(250, |_| 7.25)).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_channels(), 16);
        assert!(ds.channels().as_slice().iter().all(|&v| v == 7.25));
        assert_eq!(ds.target("CO").unwrap().unit, "ppm");
        assert_eq!(ds.sampling_period, 1.0);
    }

    #[test]
    fn column_count_mismatch() {
        let text = "0.00 1 2 3\n";
        assert!(matches!(load(text), Err(Error::Schema(_))));
    }

    #[test]
    fn unknown_mixture_tag() {
        assert!("ethylene_nox".parse::<UcsdMixture>().is_err());
        assert_eq!("ethylene-co".parse::<UcsdMixture>().unwrap(), UcsdMixture::EthyleneCo);
    }
}
