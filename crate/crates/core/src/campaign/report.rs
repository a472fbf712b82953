//! Rendering matrix reports: a PASS/FAIL grid per target, or JSON lines.

use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::{MatrixReport, MatrixRow, Suite};
use crate::attack::{SourceColumn, Target, TrafficType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "structured" | "json" | "jsonl" => Ok(ReportFormat::Structured),
            _ => Err(format!("unknown format '{s}' (expected text or structured)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Record {
    Campaign { suite: Suite, backend: String, seed: u64, repeats: u32, attack_seconds: u32, cells: usize },
    Cell(Box<MatrixRow>),
}

pub fn tier_label(mbps: u32) -> String {
    if mbps >= 1000 && mbps.is_multiple_of(1000) {
        format!("{}Gbps", mbps / 1000)
    } else {
        format!("{mbps}Mbps")
    }
}

pub fn emit_report(report: &MatrixReport, format: ReportFormat, w: impl Write) -> io::Result<()> {
    match format {
        ReportFormat::Text => write_grid(report, w),
        ReportFormat::Structured => write_structured(report, w),
    }
}

fn write_structured(report: &MatrixReport, mut w: impl Write) -> io::Result<()> {
    let head = Record::Campaign {
        suite: report.suite,
        backend: report.backend.clone(),
        seed: report.seed,
        repeats: report.repeats,
        attack_seconds: report.attack_seconds,
        cells: report.rows.len(),
    };
    writeln!(w, "{}", serde_json::to_string(&head)?)?;
    for row in &report.rows {
        writeln!(w, "{}", serde_json::to_string(&Record::Cell(Box::new(row.clone())))?)?;
    }
    Ok(())
}

pub fn read_structured(r: impl BufRead) -> io::Result<MatrixReport> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut report: Option<MatrixReport> = None;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(&line)? {
            Record::Campaign { suite, backend, seed, repeats, attack_seconds, .. } => {
                report = Some(MatrixReport { suite, backend, seed, repeats, attack_seconds, rows: Vec::new() })
            }
            Record::Cell(row) => {
                report.as_mut().ok_or_else(|| bad("cell before campaign record".into()))?.rows.push(*row)
            }
        }
    }
    report.ok_or_else(|| bad("no campaign record".into()))
}

fn write_grid(report: &MatrixReport, mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "suite {} on {} (attack {} s, seed {})",
        report.suite, report.backend, report.attack_seconds, report.seed
    )?;
    for target in Target::ALL {
        let rows: Vec<&MatrixRow> = report.rows.iter().filter(|r| r.key.target == target).collect();
        if rows.is_empty() {
            continue;
        }
        let mut columns: Vec<(SourceColumn, u32)> = Vec::new();
        for r in &rows {
            let c = (r.key.source, r.key.tier_mbps);
            if !columns.contains(&c) {
                columns.push(c);
            }
        }
        let traffic: Vec<TrafficType> =
            TrafficType::ALL.into_iter().filter(|t| rows.iter().any(|r| r.key.traffic == *t)).collect();

        const W: usize = 8;
        writeln!(w)?;
        writeln!(w, "Attack toward {target}")?;
        write!(w, "{:<12}", "")?;
        let mut groups: Vec<(SourceColumn, usize)> = Vec::new();
        for (s, _) in &columns {
            match groups.last_mut() {
                Some((g, n)) if g == s => *n += 1,
                _ => groups.push((*s, 1)),
            }
        }
        for (s, n) in &groups {
            let mut label = s.label(target);
            if *s == SourceColumn::Broadcast {
                label.push_str(" (no reference)");
            }
            write!(w, "| {:<width$}", label, width = n * W - 1)?;
        }
        writeln!(w)?;
        write!(w, "{:<12}", "Traffic")?;
        let mut prev = None;
        for (s, t) in &columns {
            let sep = if prev != Some(*s) { "| " } else { "" };
            prev = Some(*s);
            write!(w, "{sep}{:<W$}", tier_label(*t))?;
        }
        writeln!(w)?;
        for tt in traffic {
            write!(w, "{:<12}", tt.label())?;
            let mut prev = None;
            for (s, t) in &columns {
                let sep = if prev != Some(*s) { "| " } else { "" };
                prev = Some(*s);
                let v = rows
                    .iter()
                    .find(|r| r.key.traffic == tt && r.key.source == *s && r.key.tier_mbps == *t)
                    .map_or("-", |r| r.verdict.as_str());
                write!(w, "{sep}{v:<W$}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
