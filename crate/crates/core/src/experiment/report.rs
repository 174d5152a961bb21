use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::{Metric, MetricSet};
use crate::experiment::{ExperimentReport, ReportRow};
use crate::features::Extractor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

const COLUMNS: [&str; 4] = ["Stage", "Feature Extraction", "Number of Features", "Cross-validation"];

/// `mean ± std` as percentages with two decimals, e.g. `98.91 ± 0.20`.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.2} ± {:.2}", mean * 100.0, std * 100.0)
}

fn metric_cells(mean: &MetricSet, std: &MetricSet) -> Vec<String> {
    Metric::ALL
        .iter()
        .map(|&m| {
            let mut cell = format_cell(mean.get(m), std.get(m));
            if mean.is_degenerate(m) {
                cell.push('*');
            }
            cell
        })
        .collect()
}

fn row_cells(row: &ReportRow) -> Vec<String> {
    let extraction = if row.extractor == Extractor::Raw {
        "x".to_string()
    } else {
        row.extractor.to_string()
    };
    let mut cells = vec![
        format!("Stage {}", row.stage),
        extraction,
        row.n_features.to_string(),
        format!("{}-fold", row.k),
    ];
    cells.extend(metric_cells(&row.summary.mean, &row.summary.std));
    cells
}

fn header() -> Vec<&'static str> {
    let mut h = COLUMNS.to_vec();
    h.extend(Metric::ALL.iter().map(|m| m.short_name()));
    h
}

fn provenance_line(report: &ExperimentReport) -> String {
    let p = &report.provenance;
    format!("fingerprint={};seed={};version={}", p.fingerprint, p.seed, p.version)
}

/// One table per subset, in row order of first appearance.
pub fn render_markdown(report: &ExperimentReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut out = format!("<!-- {} -->\n", provenance_line(report));
    let mut subsets: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !subsets.contains(&r.subset.as_str()) {
            subsets.push(&r.subset);
        }
    }
    let head = header();
    let mut any_degenerate = false;
    for subset in subsets {
        let _ = write!(out, "\n## {subset}\n\n| {} |\n|", head.join(" | "));
        out.push_str(&"---|".repeat(head.len()));
        out.push('\n');
        for row in report.rows.iter().filter(|r| r.subset == subset) {
            any_degenerate |= !row.summary.mean.degenerate.is_empty();
            let _ = writeln!(out, "| {} |", row_cells(row).join(" | "));
        }
    }
    if any_degenerate {
        out.push_str("\n\\* at least one fold had a zero denominator for this metric; it counted as 0.\n");
    }
    Ok(out)
}

/// Flat table with a leading `Subset` column. Cells match the Markdown render.
pub fn render_csv(report: &ExperimentReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut buf = format!("# {}\n", provenance_line(report)).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut head = vec!["Subset"];
        head.extend(header());
        w.write_record(&head)?;
        for row in &report.rows {
            let mut rec = vec![row.subset.clone()];
            rec.extend(row_cells(row));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<report csv>", e))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn report_render(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
    }
}
