//! Forecast evaluation reports: a text table with one row per variant and a
//! JSON document carrying the raw ratios.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use votesim_core::forecast::{evaluate, EvalReport, ForecastDataset, Variant, VariantSpec};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub variant: String,
    pub label: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastReport {
    pub seed: u64,
    pub days: usize,
    pub sources: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Parses a comma-separated variant list; `all` selects every variant.
pub fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    if list.trim() == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    let variants = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Variant>().map_err(|_| Error::Validation(format!("variants: unknown variant `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    if variants.is_empty() {
        return Err(Error::Validation("variants: empty list".into()));
    }
    Ok(variants)
}

pub fn run_forecast(data: &ForecastDataset, specs: &[VariantSpec], seed: u64) -> Result<ForecastReport> {
    let rows = specs
        .par_iter()
        .map(|spec| {
            Ok(ReportRow {
                variant: spec.variant.name().to_string(),
                label: spec.variant.label().to_string(),
                report: evaluate(data, spec, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForecastReport { seed, days: data.days().len(), sources: data.sources().to_vec(), rows })
}

const COLUMNS: [&str; 5] = ["System", "MAE", "Comp. w/ Best Src.", "Comp. w/ Worst Src.", "Comp. w/ Avg. Src."];

pub fn render_table(report: &ForecastReport) -> String {
    let cells: Vec<[String; 5]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format!("{:.3}", r.report.system_mae),
                r.report.vs_best.rendered.clone(),
                r.report.vs_worst.rendered.clone(),
                r.report.vs_avg.rendered.clone(),
            ]
        })
        .collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let padded: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(&mut out, &COLUMNS);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for row in &cells {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn render_json(report: &ForecastReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}
