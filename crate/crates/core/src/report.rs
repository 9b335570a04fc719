//! CSV and JSON output.
//!
//! CSV output starts with the line `# tvdw v1`. Numbers are written in the
//! shortest form that reads back to the same `f64`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "# tvdw v1";

/// Shortest round-trip decimal, with `inf`, `-inf` and `nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// A CSV table with the format header line.
pub struct CsvReport<W: Write> {
    inner: csv::Writer<W>,
}

fn io(e: csv::Error) -> Error {
    Error::Resource(format!("csv output failed: {e}"))
}

impl<W: Write> CsvReport<W> {
    pub fn new(mut out: W, columns: &[&str]) -> Result<Self> {
        writeln!(out, "{CSV_HEADER}")
            .map_err(|e| Error::Resource(format!("output failed: {e}")))?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(columns).map_err(io)?;
        Ok(CsvReport { inner })
    }

    pub fn row<I, S>(&mut self, cells: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(cells).map_err(io)
    }

    pub fn finish(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Resource(format!("csv output failed: {e}")))
    }
}

/// A whole table as a string.
pub fn csv_string(columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = CsvReport::new(Vec::new(), columns)?;
    for r in rows {
        w.row(r)?;
    }
    Ok(String::from_utf8(w.finish()?).expect("csv output is utf-8"))
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_numbers() {
        let s = csv_string(&["x", "value"], &[vec![fmt_f64(0.1), fmt_f64(1e-40)]]).unwrap();
        assert_eq!(s, "# tvdw v1\nx,value\n0.1,1e-40\n");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(2.0 / 3.0).parse::<f64>().unwrap(), 2.0 / 3.0);
    }
}
