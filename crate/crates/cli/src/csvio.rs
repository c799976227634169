//! Signal CSV files: one header row of channel names, one row per sample,
//! values written with 17 significant digits so doubles survive a round trip.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use heading_bss::SignalMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub signal: SignalMatrix,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_signal(path: &Path) -> Result<Table> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_from(file).with_context(|| format!("reading {}", path.display()))
}

pub fn read_from<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        bail!("missing header row");
    }
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // Line 1 is the header.
        let line = i + 2;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("line {line}, column {}: `{field}` is not a number", c + 1))?;
            rows[c].push(v);
        }
    }
    if rows[0].is_empty() {
        bail!("no data rows");
    }
    Ok(Table {
        names,
        signal: SignalMatrix::from_rows(rows)?,
    })
}

pub fn write_signal(path: &Path, names: &[String], signal: &SignalMatrix) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_to(file, names, signal).with_context(|| format!("writing {}", path.display()))
}

pub fn write_to<W: std::io::Write>(writer: W, names: &[String], signal: &SignalMatrix) -> Result<()> {
    if names.len() != signal.channels() {
        bail!("{} names for {} channels", names.len(), signal.channels());
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for t in 0..signal.samples() {
        w.write_record(signal.rows().map(|row| format_value(row[t])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn channel_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}
