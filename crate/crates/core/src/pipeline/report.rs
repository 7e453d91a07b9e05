use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{format_metric, parse_metric, MetricReport, METRIC_NAMES};

use super::evaluate::REPORT_HEADER;

/// Whether a smaller value of the metric is better.
pub fn lower_is_better(metric: &str) -> bool {
    matches!(metric, "mse" | "nrmse")
}

/// Rows `(image_id, method, metrics)` of one report CSV.
pub fn parse_report_csv(text: &str) -> Result<Vec<(String, String, MetricReport)>> {
    let bad = |msg: String| Error::malformed("report CSV", msg);
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(bad(format!("expected header '{REPORT_HEADER}'"))),
    }
    lines
        .map(|(no, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 9 {
                return Err(bad(format!("line {}: expected 9 fields, found {}", no + 1, fields.len())));
            }
            let mut values = [0.0; 7];
            for (v, f) in values.iter_mut().zip(&fields[2..]) {
                *v = parse_metric(f).ok_or_else(|| bad(format!("line {}: '{f}' is not a number", no + 1)))?;
            }
            Ok((fields[0].to_string(), fields[1].to_string(), MetricReport::from_values(values)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: &'static str,
    pub values: Vec<f64>,
    /// Every method attaining the best value is marked.
    pub best: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub methods: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    /// Per-method means, methods in order of first appearance.
    pub fn from_rows(rows: &[(String, String, MetricReport)]) -> Result<Self> {
        let mut methods: Vec<String> = Vec::new();
        for (_, m, _) in rows {
            if !methods.contains(m) {
                methods.push(m.clone());
            }
        }
        if methods.is_empty() {
            return Err(Error::Empty("report rows".into()));
        }
        let means: Vec<MetricReport> = methods
            .iter()
            .map(|m| MetricReport::mean(rows.iter().filter(|r| &r.1 == m).map(|r| &r.2)).expect("method has rows"))
            .collect();
        Ok(Self::from_means(methods, &means))
    }

    pub fn from_means(methods: Vec<String>, means: &[MetricReport]) -> Self {
        let rows = METRIC_NAMES
            .iter()
            .enumerate()
            .map(|(i, &metric)| {
                let values: Vec<f64> = means.iter().map(|m| m.values()[i]).collect();
                let target = values.iter().copied().filter(|v| !v.is_nan()).reduce(|a, b| {
                    if lower_is_better(metric) {
                        a.min(b)
                    } else {
                        a.max(b)
                    }
                });
                let best = values.iter().map(|&v| Some(v) == target).collect();
                ReportRow { metric, values, best }
            })
            .collect();
        Self { methods, rows }
    }

    /// Fixed-width table; best values carry a trailing `*`.
    pub fn render(&self) -> String {
        let width = self.methods.iter().map(|m| m.len()).max().unwrap_or(0).max(12) + 2;
        let mut out = format!("{:<8}", "metric");
        for m in &self.methods {
            let _ = write!(out, "{m:>width$}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<8}", row.metric.to_uppercase());
            for (v, &b) in row.values.iter().zip(&row.best) {
                let cell = if v.is_finite() { format!("{v:.4}") } else { format_metric(*v) };
                let cell = if b { format!("{cell}*") } else { cell };
                let _ = write!(out, "{cell:>width$}");
            }
            out.push('\n');
        }
        out.push_str("* best per row (MSE, NRMSE lower is better; others higher); ties are all marked\n");
        out
    }
}
