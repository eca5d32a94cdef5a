use std::io::{Read, Write};

use super::PanelDataset;
use crate::{Error, Result};

/// Writes `unit,period,y,w,x1..xJ` with 1-based unit and period ids.
///
/// Floats use Rust's shortest round-trip rendering, so reading the file back
/// reproduces every value bit for bit.
pub fn write_csv<W: Write>(dataset: &PanelDataset, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["unit".to_string(), "period".into(), "y".into(), "w".into()];
    header.extend((1..=dataset.n_confounders()).map(|j| format!("x{j}")));
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for row in 0..dataset.n_rows() {
        record.clear();
        record.push((dataset.unit_of(row) + 1).to_string());
        record.push((dataset.period_of(row) + 1).to_string());
        record.push(dataset.outcome()[row].to_string());
        record.push(dataset.treatment()[row].to_string());
        for col in dataset.confounders() {
            record.push(col[row].to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_csv`]. Rows may appear in any order
/// but every (unit, period) pair must occur exactly once.
pub fn read_csv<R: Read>(input: R) -> Result<PanelDataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let fixed = ["unit", "period", "y", "w"];
    if header.len() < 4 || header.iter().take(4).ne(fixed) {
        return Err(Error::Data(format!(
            "expected header starting with unit,period,y,w; got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let n_conf = header.len() - 4;
    for (j, name) in header.iter().skip(4).enumerate() {
        if name != format!("x{}", j + 1) {
            return Err(Error::Data(format!("confounder column {} should be x{}, got `{name}`", j + 5, j + 1)));
        }
    }

    let mut raw: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_id = |k: usize| -> Result<usize> {
            let id: usize = rec[k].trim().parse().map_err(|_| {
                Error::Data(format!("line {}: bad {} id `{}`", line + 2, fixed[k], &rec[k]))
            })?;
            if id == 0 {
                return Err(Error::Data(format!("line {}: ids are 1-based", line + 2)));
            }
            Ok(id - 1)
        };
        let unit = parse_id(0)?;
        let period = parse_id(1)?;
        let values = (2..rec.len())
            .map(|k| {
                rec[k].trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!("line {}: bad number `{}`", line + 2, &rec[k]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        raw.push((unit, period, values));
    }
    let n_units = raw.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let n_periods = raw.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let rows = n_units * n_periods;
    if raw.len() != rows {
        return Err(Error::Data(format!(
            "unbalanced panel: {} rows for N={n_units}, T={n_periods}",
            raw.len()
        )));
    }
    let mut seen = vec![false; rows];
    let mut y = vec![0.0; rows];
    let mut w = vec![0.0; rows];
    let mut x = vec![vec![0.0; rows]; n_conf];
    for (unit, period, values) in raw {
        let row = unit * n_periods + period;
        if std::mem::replace(&mut seen[row], true) {
            return Err(Error::Data(format!(
                "duplicate observation for unit {}, period {}",
                unit + 1,
                period + 1
            )));
        }
        y[row] = values[0];
        w[row] = values[1];
        for (j, col) in x.iter_mut().enumerate() {
            col[row] = values[2 + j];
        }
    }
    PanelDataset::new(n_units, n_periods, y, w, x)
}
