//! Two-column CSV datasets: `(wavelength_nm,intensity)`, `(time_ns,counts)`,
//! `(freq_MHz,contrast)`, `(duration_ns,signal)`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A named two-column dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub x_name: String,
    pub y_name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Columns {
    pub fn new(x_name: &str, y_name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        Self {
            x_name: x_name.to_owned(),
            y_name: y_name.to_owned(),
            x,
            y,
        }
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([&self.x_name, &self.y_name])?;
        for (x, y) in self.x.iter().zip(&self.y) {
            wtr.write_record([x.to_string(), y.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 {
            return Err(Error::validation(format!(
                "expected two CSV columns, found {}",
                headers.len()
            )));
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| {
                    Error::validation(format!("row {}: column {}: {e}", line + 2, i + 1))
                })
            };
            x.push(parse(0)?);
            y.push(parse(1)?);
        }
        Ok(Self::new(&headers[0], &headers[1], x, y))
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }
}
