//! Labelled samples and their CSV form (`x_0,…,x_{d−1},y`).

use std::io::{BufRead, Write};

use crate::csv::fmt_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        if let Some(first) = xs.first() {
            let d = first.len();
            if let Some(bad) = xs.iter().find(|x| x.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.len(),
                });
            }
        }
        Ok(Dataset { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, Vec::len)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        writeln!(w, "{}", header.join(","))?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let mut fields: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
            fields.push(fmt_f64(*y));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let parse_err = |line: &str| Error::Parse {
            what: "dataset row",
            input: line.to_string(),
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::EmptyInput("dataset csv has no header"))??;
        let cols = header.split(',').count();
        if cols < 2 || header.split(',').next_back() != Some("y") {
            return Err(parse_err(&header));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(&line))?;
            if vals.len() != cols {
                return Err(parse_err(&line));
            }
            ys.push(vals[cols - 1]);
            xs.push(vals[..cols - 1].to_vec());
        }
        Dataset::new(xs, ys)
    }
}
