//! Plain CSV and text output for runs and sweeps, plus loaders for every
//! CSV written here.
//!
//! Reals are written with six decimals so that repeated runs give
//! byte-identical files. Files are written to a temporary sibling first and
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{Correlogram, FlatnessReport, OverheadReport};
use crate::attacker::TrendSeries;
use crate::engine::{SimulationReport, TradeoffRow};

pub const TREND_HEADER: &str = "step,inventory,apparent_sales,apparent_restock";
pub const CORRELOGRAM_HEADER: &str = "lag,r_k";
pub const FLATNESS_HEADER: &str = "series,mean,std_dev,coefficient_of_variation,max_abs_deviation";
pub const OVERHEAD_HEADER: &str = "step,honeytoken_read_ms,write_ms,reads,writes,overhead_ms";
pub const TRADEOFF_HEADER: &str = "budget_multiplier,budget,mean_abs_acf_mean,mean_abs_acf_std,mean_read_success,mean_step_overhead_ms";

/// Files written by [`write_report_files`].
pub const REPORT_FILES: [&str; 5] = [
    "report.csv",
    "ground_truth.csv",
    "correlogram.csv",
    "overhead.csv",
    "summary.txt",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing header, expected `{expected}`")]
    Header { expected: &'static str },
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn trend_csv(series: &TrendSeries) -> String {
    let n = series.len();
    // diffs may lack the first step when there was no baseline scan
    let lead = n - series.apparent_sales.len().min(n);
    let mut out = format!("{TREND_HEADER}\n");
    for i in 0..n {
        let (s, r) = if i < lead {
            (String::new(), String::new())
        } else {
            (
                series.apparent_sales[i - lead].to_string(),
                series.apparent_restock[i - lead].to_string(),
            )
        };
        let _ = writeln!(out, "{},{},{s},{r}", series.t0 + i, series.inventory[i]);
    }
    out
}

pub fn correlogram_csv(c: &Correlogram) -> String {
    let mut out = format!("{CORRELOGRAM_HEADER}\n");
    for (lag, r) in c.lags.iter().zip(&c.coefficients) {
        let _ = writeln!(out, "{lag},{}", fmt6(*r));
    }
    out
}

/// One row per labelled report; an undefined CV is an empty cell.
pub fn flatness_csv(rows: &[(&str, &FlatnessReport)]) -> String {
    let mut out = format!("{FLATNESS_HEADER}\n");
    for (label, f) in rows {
        let cv = f.coefficient_of_variation.map(fmt6).unwrap_or_default();
        let _ = writeln!(
            out,
            "{label},{},{},{cv},{}",
            fmt6(f.mean),
            fmt6(f.std_dev),
            fmt6(f.max_abs_deviation_from_mean)
        );
    }
    out
}

pub fn overhead_csv(o: &OverheadReport) -> String {
    let mut out = format!("{OVERHEAD_HEADER}\n");
    for i in 0..o.steps() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            fmt6(o.per_step_read_ms[i]),
            fmt6(o.per_step_write_ms[i]),
            o.per_step_reads[i],
            o.per_step_writes[i],
            fmt6(o.per_step_overhead_ms[i])
        );
    }
    out
}

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = format!("{TRADEOFF_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt6(r.budget_multiplier),
            r.budget,
            fmt6(r.mean_abs_acf_mean),
            fmt6(r.mean_abs_acf_std),
            fmt6(r.mean_read_success),
            fmt6(r.mean_step_overhead_ms)
        );
    }
    out
}

pub fn summary_text(r: &SimulationReport) -> String {
    let mut out = String::new();
    let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), fmt6);
    let cv = |f: &Option<FlatnessReport>| opt(f.and_then(|f| f.coefficient_of_variation));
    let _ = writeln!(out, "goal_mode: {}", r.mode);
    let _ = writeln!(out, "budget: {}", r.budget);
    let _ = writeln!(out, "seed: {}", r.seed);
    let _ = writeln!(out, "steps: {}", r.steps.len());
    let _ = writeln!(out, "raw_mean_abs_acf: {}", opt(r.raw_mean_abs_acf()));
    let _ = writeln!(out, "mirage_mean_abs_acf: {}", opt(r.mirage_mean_abs_acf()));
    let _ = writeln!(out, "raw_cv: {}", cv(&r.raw_flatness));
    let _ = writeln!(out, "mirage_cv: {}", cv(&r.mirage_flatness));
    let _ = writeln!(out, "mean_read_success: {}", fmt6(r.mean_read_success()));
    let _ = writeln!(out, "honeytoken_reads: {}", r.overhead.reads_count);
    let _ = writeln!(
        out,
        "honeytoken_read_ms: {}",
        fmt6(r.overhead.total_honeytoken_read_ms)
    );
    let _ = writeln!(out, "writes: {}", r.overhead.writes_count);
    let _ = writeln!(out, "write_ms: {}", fmt6(r.overhead.total_write_ms));
    let _ = writeln!(
        out,
        "mean_step_overhead_ms: {}",
        fmt6(r.overhead.mean_step_overhead_ms())
    );
    let _ = writeln!(
        out,
        "cold_start_steps: {}",
        r.steps.iter().filter(|s| s.cold_start).count()
    );
    let shortfalls: Vec<String> = r
        .shortfalls()
        .map(|s| format!("{}:{}/{}", s.t, s.sales_shortfall, s.restock_shortfall))
        .collect();
    let _ = writeln!(out, "shortfall_steps: {}", shortfalls.len());
    if !shortfalls.is_empty() {
        let _ = writeln!(
            out,
            "shortfalls (step:sales/restock): {}",
            shortfalls.join(" ")
        );
    }
    out
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), ReportError> {
    let io_err = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path.file_name().ok_or_else(|| {
        io_err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "not a file path",
        ))
    })?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Writes the attacker view, ground truth, correlogram of the disguised
/// series as the attacker sees it, overhead table and summary of one run
/// into `dir`, creating it if needed. A run too short for a correlogram
/// gets a header-only correlogram file.
pub fn write_report_files(r: &SimulationReport, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let contents = [
        trend_csv(&r.attacker_view),
        trend_csv(&r.ground_truth),
        r.mirage_correlogram
            .as_ref()
            .map_or_else(|| format!("{CORRELOGRAM_HEADER}\n"), correlogram_csv),
        overhead_csv(&r.overhead),
        summary_text(r),
    ];
    for (name, text) in REPORT_FILES.iter().zip(contents) {
        write_atomic(&dir.join(name), &text)?;
    }
    Ok(())
}

/// Data rows of a CSV with the given header, as `(line number, cells)`.
fn rows<'a>(
    text: &'a str,
    header: &'static str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>, ReportError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(ReportError::Header { expected: header }),
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| (n, l.split(',').collect())))
}

fn cell<T: std::str::FromStr>(cells: &[&str], i: usize, line: usize) -> Result<T, ReportError> {
    let raw = cells.get(i).ok_or_else(|| ReportError::Parse {
        line,
        reason: format!("expected at least {} columns", i + 1),
    })?;
    raw.trim().parse().map_err(|_| ReportError::Parse {
        line,
        reason: format!("bad value `{raw}` in column {}", i + 1),
    })
}

fn opt_cell<T: std::str::FromStr>(
    cells: &[&str],
    i: usize,
    line: usize,
) -> Result<Option<T>, ReportError> {
    match cells.get(i) {
        Some(c) if c.trim().is_empty() => Ok(None),
        _ => cell(cells, i, line).map(Some),
    }
}

pub fn parse_trend_csv(text: &str) -> Result<TrendSeries, ReportError> {
    let mut series = TrendSeries::default();
    for (k, (line, cells)) in rows(text, TREND_HEADER)?.enumerate() {
        let step: usize = cell(&cells, 0, line)?;
        if k == 0 {
            series.t0 = step;
        } else if step != series.t0 + k {
            return Err(ReportError::Parse {
                line,
                reason: format!("expected step {}, found {step}", series.t0 + k),
            });
        }
        series.inventory.push(cell(&cells, 1, line)?);
        let sales = opt_cell(&cells, 2, line)?;
        let restock = opt_cell(&cells, 3, line)?;
        match (sales, restock) {
            (Some(s), Some(r)) => {
                series.apparent_sales.push(s);
                series.apparent_restock.push(r);
            }
            (None, None) if k == 0 => {}
            _ => {
                return Err(ReportError::Parse {
                    line,
                    reason: "sales and restock must both be present".into(),
                })
            }
        }
    }
    Ok(series)
}

pub fn parse_correlogram_csv(text: &str) -> Result<Correlogram, ReportError> {
    let mut c = Correlogram {
        lags: Vec::new(),
        coefficients: Vec::new(),
    };
    for (line, cells) in rows(text, CORRELOGRAM_HEADER)? {
        c.lags.push(cell(&cells, 0, line)?);
        c.coefficients.push(cell(&cells, 1, line)?);
    }
    Ok(c)
}

pub fn parse_flatness_csv(text: &str) -> Result<Vec<(String, FlatnessReport)>, ReportError> {
    rows(text, FLATNESS_HEADER)?
        .map(|(line, cells)| {
            Ok((
                cells[0].to_string(),
                FlatnessReport {
                    mean: cell(&cells, 1, line)?,
                    std_dev: cell(&cells, 2, line)?,
                    coefficient_of_variation: opt_cell(&cells, 3, line)?,
                    max_abs_deviation_from_mean: cell(&cells, 4, line)?,
                },
            ))
        })
        .collect()
}

pub fn parse_overhead_csv(text: &str) -> Result<OverheadReport, ReportError> {
    let mut o = OverheadReport {
        total_honeytoken_read_ms: 0.0,
        total_write_ms: 0.0,
        writes_count: 0,
        reads_count: 0,
        per_step_read_ms: Vec::new(),
        per_step_write_ms: Vec::new(),
        per_step_reads: Vec::new(),
        per_step_writes: Vec::new(),
        per_step_overhead_ms: Vec::new(),
    };
    for (line, cells) in rows(text, OVERHEAD_HEADER)? {
        o.per_step_read_ms.push(cell(&cells, 1, line)?);
        o.per_step_write_ms.push(cell(&cells, 2, line)?);
        o.per_step_reads.push(cell(&cells, 3, line)?);
        o.per_step_writes.push(cell(&cells, 4, line)?);
        o.per_step_overhead_ms.push(cell(&cells, 5, line)?);
    }
    o.total_honeytoken_read_ms = o.per_step_read_ms.iter().sum();
    o.total_write_ms = o.per_step_write_ms.iter().sum();
    o.reads_count = o.per_step_reads.iter().sum();
    o.writes_count = o.per_step_writes.iter().sum();
    Ok(o)
}

pub fn parse_tradeoff_csv(text: &str) -> Result<Vec<TradeoffRow>, ReportError> {
    rows(text, TRADEOFF_HEADER)?
        .map(|(line, cells)| {
            Ok(TradeoffRow {
                budget_multiplier: cell(&cells, 0, line)?,
                budget: cell(&cells, 1, line)?,
                mean_abs_acf_mean: cell(&cells, 2, line)?,
                mean_abs_acf_std: cell(&cells, 3, line)?,
                mean_read_success: cell(&cells, 4, line)?,
                mean_step_overhead_ms: cell(&cells, 5, line)?,
            })
        })
        .collect()
}

/// Reads one numeric column of a CSV with a header row, by name.
pub fn read_column(text: &str, column: &str) -> Result<Vec<f64>, ReportError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.starts_with('#') || l.is_empty() => continue,
            Some((_, l)) => break l,
            None => {
                return Err(ReportError::Parse {
                    line: 1,
                    reason: "no header row".into(),
                })
            }
        }
    };
    let idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| ReportError::Parse {
            line: 1,
            reason: format!("no column named `{column}` in `{header}`"),
        })?;
    let mut out = Vec::new();
    for (line, l) in lines.filter(|(_, l)| !l.is_empty()) {
        let cells: Vec<&str> = l.split(',').collect();
        // leading blank cells come from undefined first-step diffs
        if let Some(v) = opt_cell::<f64>(&cells, idx, line)? {
            out.push(v);
        }
    }
    Ok(out)
}
