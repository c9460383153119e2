//! Single-column CSV series format.
//!
//! One numeric value per row. The first row is treated as a header when its
//! first token does not parse as a number. The writer mirrors the reader.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, SsaError};
use crate::series::TimeSeries;

/// A series read from CSV together with its optional header label.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSeries {
    pub header: Option<String>,
    pub series: TimeSeries,
}

pub fn read_series<R: Read>(reader: R) -> Result<CsvSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let token = match record.get(0) {
            Some(t) if !t.is_empty() => t,
            _ => continue,
        };
        match token.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if row == 0 => header = Some(token.to_string()),
            Err(_) => {
                return Err(SsaError::Parse(format!(
                    "row {}: '{}' is not a number",
                    row + 1,
                    token
                )))
            }
        }
    }
    Ok(CsvSeries {
        header,
        series: TimeSeries::new(values)?,
    })
}

pub fn read_series_file(path: impl AsRef<Path>) -> Result<CsvSeries> {
    let file = std::fs::File::open(path)?;
    read_series(file)
}

pub fn write_series<W: Write>(writer: W, series: &TimeSeries, header: Option<&str>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        wtr.write_record([h])?;
    }
    for v in series.iter() {
        wtr.write_record([format_f64(*v)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_and_without_header() {
        let a = read_series("value\n1\n2.5\n-3e-2\n".as_bytes()).unwrap();
        assert_eq!(a.header.as_deref(), Some("value"));
        assert_eq!(a.series.values(), &[1.0, 2.5, -0.03]);

        let b = read_series("1\n2\n".as_bytes()).unwrap();
        assert_eq!(b.header, None);
        assert_eq!(b.series.values(), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_text_after_first_row() {
        assert!(matches!(
            read_series("1\nabc\n".as_bytes()),
            Err(SsaError::Parse(_))
        ));
    }

    #[test]
    fn writer_mirrors_reader() {
        let s = TimeSeries::new(vec![0.1, 1.0 / 3.0, -7.25e10]).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s, Some("x")).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        assert_eq!(back.header.as_deref(), Some("x"));
        assert_eq!(back.series, s);
    }
}
