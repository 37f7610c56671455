//! The convergence table as CSV.
//!
//! Floats are written in scientific notation with six digits after the
//! point (`1.234560e-2`); undefined rates are empty fields.

use std::io::{self, Write};

use crate::study::ConvergenceRecord;

pub const HEADER: &str =
    "level,h,ndof_total,ndof_boundary,err_q_L2,err_u_L2,rate_q,rate_u,cg_iters_total,wall_seconds";

fn float(v: f64) -> String {
    format!("{v:.6e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn format_record(r: &ConvergenceRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.level,
        float(r.h),
        r.ndof_total,
        r.ndof_boundary,
        float(r.err_q_l2),
        float(r.err_u_l2),
        optional(r.rate_q),
        optional(r.rate_u),
        r.cg_iters_total,
        float(r.wall_seconds),
    )
}

/// Writes rows as they arrive, flushing after each one so that an aborted
/// study leaves a valid partial table behind.
#[derive(Debug)]
pub struct TableWriter<W: Write> {
    out: W,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &ConvergenceRecord) -> io::Result<()> {
        writeln!(self.out, "{}", format_record(record))?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_csv(records: &[ConvergenceRecord], out: impl Write) -> io::Result<()> {
    let mut writer = TableWriter::new(out)?;
    records.iter().try_for_each(|r| writer.write(r))
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(String),
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Field {
        row: usize,
        column: &'static str,
        value: String,
    },
}

pub fn parse_csv(input: impl io::Read) -> Result<Vec<ConvergenceRecord>, ParseError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != HEADER {
        return Err(ParseError::Header(header));
    }
    let columns: Vec<&'static str> = HEADER.split(',').collect();
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let fields = result?;
        let get = |i: usize| fields.get(i).unwrap_or("");
        let fail = |i: usize| ParseError::Field {
            row,
            column: columns[i],
            value: get(i).to_owned(),
        };
        let int = |i: usize| get(i).parse::<usize>().map_err(|_| fail(i));
        let real = |i: usize| get(i).parse::<f64>().map_err(|_| fail(i));
        let rate = |i: usize| match get(i) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|_| fail(i)),
        };
        records.push(ConvergenceRecord {
            level: int(0)?,
            h: real(1)?,
            ndof_total: int(2)?,
            ndof_boundary: int(3)?,
            err_q_l2: real(4)?,
            err_u_l2: real(5)?,
            rate_q: rate(6)?,
            rate_u: rate(7)?,
            cg_iters_total: int(8)?,
            wall_seconds: real(9)?,
        });
    }
    Ok(records)
}
