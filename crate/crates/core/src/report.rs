//! Bound-measurement reports and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::exponent::ExponentConfig;

pub const BOUND_CSV_HEADER: [&str; 10] =
    ["assertion", "operator", "p", "d", "sigma", "param1_name", "param1", "param2_name", "param2", "ratio"];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub param1_name: String,
    pub param1: f64,
    pub param2_name: String,
    pub param2: f64,
    pub ratio: f64,
}

/// One measured ratio family. `sup_ratio` is always the max of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub assertion: String,
    pub operator: String,
    pub p: f64,
    pub d: f64,
    pub sigma: f64,
    pub rows: Vec<BoundRow>,
    pub grid: String,
    /// Norms came from power iteration and are lower bounds only.
    pub lower_bound: bool,
    /// Free-form flags (vacuous bounds, zero-mode growth, surrogate notes).
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new(assertion: &str, operator: &str, cfg: &ExponentConfig, grid: impl Into<String>) -> Self {
        Self {
            assertion: assertion.to_string(),
            operator: operator.to_string(),
            p: cfg.p(),
            d: cfg.d(),
            sigma: cfg.sigma(),
            rows: Vec::new(),
            grid: grid.into(),
            lower_bound: false,
            flags: Vec::new(),
        }
    }

    pub fn push(&mut self, p1: (&str, f64), p2: (&str, f64), ratio: f64) {
        self.rows.push(BoundRow {
            param1_name: p1.0.to_string(),
            param1: p1.1,
            param2_name: p2.0.to_string(),
            param2: p2.1,
            ratio,
        });
    }

    /// Maximum ratio; NaN rows propagate, an empty report gives 0.
    pub fn sup_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
    }

    /// Max ratio over rows whose `param1` satisfies `keep`.
    pub fn sup_where<P: Fn(&BoundRow) -> bool>(&self, keep: P) -> f64 {
        self.rows.iter().filter(|r| keep(r)).map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_bound_csv(std::slice::from_ref(self), w)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_bound_csv<W: Write>(reports: &[BoundReport], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(BOUND_CSV_HEADER)?;
    for rep in reports {
        for r in &rep.rows {
            out.write_record([
                rep.assertion.clone(),
                rep.operator.clone(),
                num(rep.p),
                num(rep.d),
                num(rep.sigma),
                r.param1_name.clone(),
                num(r.param1),
                r.param2_name.clone(),
                num(r.param2),
                num(r.ratio),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses CSV written by [`write_bound_csv`] back into reports, grouping
/// consecutive rows with the same assertion and operator.
pub fn read_bound_csv<R: Read>(r: R) -> Result<Vec<BoundReport>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != BOUND_CSV_HEADER {
        return Err(Error::Parse(format!("unexpected bound CSV header {header:?}")));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
    let mut out: Vec<BoundReport> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (assertion, operator) = (&rec[0], &rec[1]);
        let (p, d, sigma) = (parse(&rec[2])?, parse(&rec[3])?, parse(&rec[4])?);
        let row = BoundRow {
            param1_name: rec[5].to_string(),
            param1: parse(&rec[6])?,
            param2_name: rec[7].to_string(),
            param2: parse(&rec[8])?,
            ratio: parse(&rec[9])?,
        };
        match out.last_mut() {
            Some(last) if last.assertion == assertion && last.operator == operator && last.p == p && last.d == d => {
                last.rows.push(row)
            }
            _ => out.push(BoundReport {
                assertion: assertion.to_string(),
                operator: operator.to_string(),
                p,
                d,
                sigma,
                rows: vec![row],
                grid: String::new(),
                lower_bound: false,
                flags: Vec::new(),
            }),
        }
    }
    Ok(out)
}
