//! Shared helpers for the delimited-text loaders.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Delimiter {
    Comma,
    Semicolon,
    Tab,
    Whitespace,
}

impl Delimiter {
    /// Guess from a header or first data line.
    pub(crate) fn detect(line: &str) -> Self {
        let semi = line.matches(';').count();
        let comma = line.matches(',').count();
        if semi > 0 && semi >= comma {
            Delimiter::Semicolon
        } else if comma > 0 {
            Delimiter::Comma
        } else if line.contains('\t') {
            Delimiter::Tab
        } else {
            Delimiter::Whitespace
        }
    }

    pub(crate) fn parse(name: &str) -> Result<Option<Self>> {
        Ok(match name {
            "auto" | "" => None,
            "," | "comma" => Some(Delimiter::Comma),
            ";" | "semicolon" => Some(Delimiter::Semicolon),
            "\t" | "tab" => Some(Delimiter::Tab),
            "whitespace" | "space" => Some(Delimiter::Whitespace),
            other => return Err(Error::Config(format!("unknown delimiter {other:?}"))),
        })
    }

    pub(crate) fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // The public archives are ASCII; tolerate stray Latin-1 bytes in headers.
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}

/// Parse one numeric cell. Empty cells are `None`.
pub(crate) fn parse_cell(cell: &str, decimal_comma: bool, line: usize) -> Result<Option<f64>> {
    let cell = cell.trim().trim_matches('"');
    if cell.is_empty() {
        return Ok(None);
    }
    let parsed = if decimal_comma && cell.contains(',') {
        cell.replace(',', ".").parse::<f64>()
    } else {
        cell.parse::<f64>()
    };
    parsed
        .map(Some)
        .map_err(|_| Error::parse(line, format!("not a number: {cell:?}")))
}

/// Dates as `dd/mm/yyyy` or ISO `yyyy-mm-dd`; times as `HH.MM.SS` or `HH:MM:SS`.
pub(crate) fn parse_date_time(date: &str, time: &str, line: usize) -> Result<NaiveDateTime> {
    let date = date.trim();
    let d = NaiveDate::parse_from_str(date, "%d/%m/%Y")
        .or_else(|_| NaiveDate::parse_from_str(date, "%Y-%m-%d"))
        .map_err(|_| Error::parse(line, format!("bad date {date:?}")))?;
    let time = time.trim().replace('.', ":");
    let t = NaiveTime::parse_from_str(&time, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(&time, "%H:%M"))
        .map_err(|_| Error::parse(line, format!("bad time {time:?}")))?;
    Ok(d.and_time(t))
}

pub(crate) fn epoch_seconds(dt: &NaiveDateTime) -> f64 {
    dt.and_utc().timestamp() as f64
}

/// A timestamp cell: plain seconds, or a date-time in one of a few common layouts.
pub(crate) fn parse_timestamp(cell: &str, format: Option<&str>, line: usize) -> Result<f64> {
    let cell = cell.trim().trim_matches('"');
    if let Some(fmt) = format {
        let dt = NaiveDateTime::parse_from_str(cell, fmt)
            .map_err(|_| Error::parse(line, format!("timestamp {cell:?} does not match {fmt:?}")))?;
        return Ok(epoch_seconds(&dt));
    }
    if let Ok(v) = cell.parse::<f64>() {
        return Ok(v);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%d/%m/%Y %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(cell, fmt) {
            return Ok(epoch_seconds(&dt));
        }
    }
    Err(Error::parse(line, format!("unrecognized timestamp {cell:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_delimiters() {
        assert_eq!(Delimiter::detect("a;b;c,1"), Delimiter::Semicolon);
        assert_eq!(Delimiter::detect("a,b,c"), Delimiter::Comma);
        assert_eq!(Delimiter::detect("a\tb"), Delimiter::Tab);
        assert_eq!(Delimiter::detect("0.00 1.0  2.0"), Delimiter::Whitespace);
    }

    #[test]
    fn decimal_comma_cells() {
        assert_eq!(parse_cell("2,6", true, 1).unwrap(), Some(2.6));
        assert_eq!(parse_cell("", true, 1).unwrap(), None);
        assert!(parse_cell("x", false, 7).is_err());
    }

    #[test]
    fn enea_style_time() {
        let dt = parse_date_time("10/03/2004", "18.00.00", 2).unwrap();
        assert_eq!(dt.to_string(), "2004-03-10 18:00:00");
    }
}
