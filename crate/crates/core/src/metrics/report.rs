//! Serialisable report files and their aligned text tables.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicMetrics {
    pub n: usize,
    pub p_at_1: f64,
    pub mrr: f64,
    pub auc_roc: f64,
    pub score_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    pub steps: usize,
    pub excluded: usize,
    pub exclusion_rate: f64,
    /// `(k, GARR@k)`; `None` when every step was excluded.
    pub garr: Vec<(usize, Option<f64>)>,
    pub safety_margin: Option<f64>,
}

impl FilterMetrics {
    pub fn garr_at(&self, k: usize) -> Option<f64> {
        self.garr
            .iter()
            .find(|(kk, _)| *kk == k)
            .and_then(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: String,
    pub metrics: IntrinsicMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicReport {
    pub schema_version: u32,
    pub system: String,
    /// Per category, in table order, ending with the pooled `combined` row.
    pub categories: Vec<CategoryMetrics>,
}

impl IntrinsicReport {
    pub fn category(&self, name: &str) -> Option<&IntrinsicMetrics> {
        self.categories
            .iter()
            .find(|c| c.category == name)
            .map(|c| &c.metrics)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub schema_version: u32,
    pub system: String,
    pub condition: String,
    pub families: Vec<String>,
    pub episodes: usize,
    pub metrics: FilterMetrics,
}

fn check_versions(versions: impl Iterator<Item = u32>) -> Result<()> {
    for v in versions {
        if v != crate::SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "report schema_version {v} (expected {})",
                crate::SCHEMA_VERSION
            )));
        }
    }
    Ok(())
}

fn opt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.prec$}"))
}

/// Category blocks with one row per system: P@1 (%), MRR, AUC-ROC, score gap.
pub fn render_intrinsic_table(reports: &[IntrinsicReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Config("no intrinsic reports to render".into()));
    }
    check_versions(reports.iter().map(|r| r.schema_version))?;
    let mut categories: Vec<&str> = Vec::new();
    for r in reports {
        for c in &r.categories {
            if !categories.contains(&c.category.as_str()) {
                categories.push(&c.category);
            }
        }
    }
    // combined first, as a summary block
    if let Some(i) = categories.iter().position(|c| *c == "combined") {
        let c = categories.remove(i);
        categories.insert(0, c);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<26} {:<12} {:>8} {:>7} {:>8} {:>10}",
        "category", "system", "P@1 (%)", "MRR", "AUC-ROC", "score gap"
    );
    for cat in categories {
        out.push_str(&"-".repeat(76));
        out.push('\n');
        for (row, r) in reports.iter().enumerate() {
            let Some(m) = r.category(cat) else { continue };
            let label = if row == 0 {
                format!("{cat} (n={})", m.n)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{:<26} {:<12} {:>8.2} {:>7.3} {:>8.3} {:>10.3}",
                label,
                r.system,
                100.0 * m.p_at_1,
                m.mrr,
                m.auc_roc,
                m.score_gap
            );
        }
    }
    Ok(out)
}

/// Condition blocks with one row per system: steps, GARR@k, safety margin.
pub fn render_filter_table(reports: &[FilterReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Config("no filter reports to render".into()));
    }
    check_versions(reports.iter().map(|r| r.schema_version))?;
    let ks: Vec<usize> = reports[0].metrics.garr.iter().map(|(k, _)| *k).collect();
    let mut out = String::new();
    let _ = write!(out, "{:<12} {:>6}", "system", "steps");
    for k in &ks {
        let _ = write!(out, " {:>8}", format!("GARR@{k}"));
    }
    let _ = writeln!(out, " {:>14} {:>9}", "safety margin", "excluded");

    let mut conditions: Vec<&str> = Vec::new();
    for r in reports {
        if !conditions.contains(&r.condition.as_str()) {
            conditions.push(&r.condition);
        }
    }
    let width = 12 + 7 + 9 * ks.len() + 15 + 10;
    for cond in conditions {
        out.push_str(&"-".repeat(width));
        out.push('\n');
        let first = reports
            .iter()
            .find(|r| r.condition == cond)
            .expect("condition present");
        let _ = writeln!(out, "{cond} ({})", first.families.join(", "));
        for r in reports.iter().filter(|r| r.condition == cond) {
            let m = &r.metrics;
            let _ = write!(out, "{:<12} {:>6}", r.system, m.steps);
            for &k in &ks {
                let _ = write!(out, " {:>8}", opt(m.garr_at(k), 3));
            }
            let _ = writeln!(
                out,
                " {:>14} {:>9}",
                opt(m.safety_margin, 3),
                format!("{:.1}%", 100.0 * m.exclusion_rate)
            );
        }
    }
    Ok(out)
}
