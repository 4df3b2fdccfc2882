use std::path::Path;

use super::{Stat, Summary, SweepRow};
use crate::error::{Error, Result};

pub const ROW_HEADER: &str = "seller,buyer,gamma,T,value_model,seed,revenue,surplus,benchmark_rate,regret";
pub const SUMMARY_HEADER: &str =
    "seller,buyer,gamma,T,n,regret_mean,regret_stderr,revenue_mean,revenue_stderr,surplus_mean,surplus_stderr";

/// Renders a float with at most 12 significant digits, plain decimal
/// notation, no trailing zeros (`2`, `0.575`, `0.000001`).
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("scientific float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(mut w: csv::Writer<Vec<u8>>) -> String {
    w.flush().expect("in-memory flush");
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut w = writer();
    w.write_record(ROW_HEADER.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.seller.clone(),
            r.buyer.clone(),
            fmt_float(r.gamma),
            r.horizon.to_string(),
            r.value_model.clone(),
            r.seed.to_string(),
            fmt_float(r.revenue),
            fmt_float(r.surplus),
            fmt_float(r.benchmark_rate),
            fmt_float(r.regret),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn summaries_to_csv(summaries: &[Summary]) -> String {
    let mut w = writer();
    w.write_record(SUMMARY_HEADER.split(',')).expect("in-memory write");
    for s in summaries {
        w.write_record([
            s.seller.clone(),
            s.buyer.clone(),
            fmt_float(s.gamma),
            s.horizon.to_string(),
            s.n.to_string(),
            fmt_float(s.regret.mean),
            fmt_float(s.regret.stderr),
            fmt_float(s.revenue.mean),
            fmt_float(s.revenue.stderr),
            fmt_float(s.surplus.mean),
            fmt_float(s.surplus.stderr),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(summaries: &[Summary], path: &Path) -> Result<()> {
    std::fs::write(path, summaries_to_csv(summaries)).map_err(|e| Error::io(path, e))
}

/// Contents of a CSV written by this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvContents {
    Rows(Vec<SweepRow>),
    Summaries(Vec<Summary>),
}

/// Reads either a row CSV or a summary CSV, told apart by the header.
pub fn read_csv(text: &str) -> Result<CsvContents> {
    let header = text.lines().next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let bad = |line: usize, e: &dyn std::fmt::Display| Error::parse(format!("line {line}"), e.to_string());
    let num = |s: &str, line: usize| s.parse::<f64>().map_err(|e| bad(line, &e));
    let int = |s: &str, line: usize| s.parse::<u64>().map_err(|e| bad(line, &e));
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        records.push((i + 2, rec.map_err(|e| bad(i + 2, &e))?));
    }
    if header == ROW_HEADER {
        let rows = records
            .iter()
            .map(|(line, r)| {
                let line = *line;
                if r.len() != 10 {
                    return Err(bad(line, &"expected 10 columns"));
                }
                Ok(SweepRow {
                    seller: r[0].to_string(),
                    buyer: r[1].to_string(),
                    gamma: num(&r[2], line)?,
                    horizon: int(&r[3], line)? as u32,
                    value_model: r[4].to_string(),
                    seed: int(&r[5], line)?,
                    revenue: num(&r[6], line)?,
                    surplus: num(&r[7], line)?,
                    benchmark_rate: num(&r[8], line)?,
                    regret: num(&r[9], line)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CsvContents::Rows(rows))
    } else if header == SUMMARY_HEADER {
        let rows = records
            .iter()
            .map(|(line, r)| {
                let line = *line;
                if r.len() != 11 {
                    return Err(bad(line, &"expected 11 columns"));
                }
                let stat = |m: usize| -> Result<Stat> {
                    Ok(Stat {
                        mean: num(&r[m], line)?,
                        stderr: num(&r[m + 1], line)?,
                    })
                };
                Ok(Summary {
                    seller: r[0].to_string(),
                    buyer: r[1].to_string(),
                    gamma: num(&r[2], line)?,
                    horizon: int(&r[3], line)? as u32,
                    n: int(&r[4], line)? as usize,
                    regret: stat(5)?,
                    revenue: stat(7)?,
                    surplus: stat(9)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CsvContents::Summaries(rows))
    } else {
        Err(Error::parse(header, "not a stratprice CSV header"))
    }
}
