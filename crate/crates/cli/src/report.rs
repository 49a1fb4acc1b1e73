// SPDX-License-Identifier: Apache-2.0

//! Human-readable table and CSV rendering of bench results.

use std::fmt::Write as _;
use std::time::Duration;

use crate::bench::{BenchReport, BenchRow};

pub const CSV_HEADER: &str = "operation,backend,iterations,total_us,internal_us,overhead_us";

/// Nanoseconds as microseconds with three decimals, without going through floats.
pub fn micros(ns: u64) -> String {
    format!("{}.{:03}", ns / 1000, ns % 1000)
}

pub fn header(op: &str, iterations: u64, resolution: Duration) -> String {
    format!(
        "# unikrypt bench: op={op} iterations={iterations}\n\
         # timing: monotonic clock (std::time::Instant), observed resolution {} ns\n\
         # total = whole API call; internal = backend primitive or device command; overhead = total - internal\n",
        resolution.as_nanos()
    )
}

pub fn table(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:<14} {:>10} {:>14} {:>14} {:>14}",
        "operation", "backend", "iterations", "total_us", "internal_us", "overhead_us"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:<22} {:<14} {:>10} {:>14} {:>14} {:>14}",
            r.operation,
            r.backend,
            r.iterations,
            micros(r.total_ns),
            micros(r.internal_ns),
            micros(r.overhead_ns())
        );
    }
    for f in &report.failures {
        let _ = writeln!(s, "{:<22} {:<14} {}", f.operation, f.backend, f.error.status());
    }
    for c in &report.checks {
        let verdict = if c.passed { "ok" } else { "FAILED" };
        let _ = writeln!(s, "check {:<18} {verdict}  {}", c.name, c.detail);
    }
    s
}

fn csv_line(r: &BenchRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.operation,
        r.backend,
        r.iterations,
        micros(r.total_ns),
        micros(r.internal_ns),
        micros(r.overhead_ns())
    )
}

pub fn csv(report: &BenchReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.rows {
        s.push_str(&csv_line(r));
        s.push('\n');
    }
    s
}

/// A CSV data line parsed back into its fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    pub operation: String,
    pub backend: String,
    pub iterations: u64,
    pub total_ns: u64,
    pub internal_ns: u64,
    pub overhead_ns: u64,
}

fn parse_micros(s: &str) -> Option<u64> {
    let (whole, frac) = s.split_once('.')?;
    if frac.len() != 3 {
        return None;
    }
    Some(whole.parse::<u64>().ok()? * 1000 + frac.parse::<u64>().ok()?)
}

pub fn parse_csv(text: &str) -> Option<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return None;
            }
            Some(CsvRow {
                operation: f[0].to_string(),
                backend: f[1].to_string(),
                iterations: f[2].parse().ok()?,
                total_ns: parse_micros(f[3])?,
                internal_ns: parse_micros(f[4])?,
                overhead_ns: parse_micros(f[5])?,
            })
        })
        .collect()
}
