//! Text and CSV rendering of scenario results.

use std::fmt;

use crate::model::EmissionsReport;
use crate::scenario::ScenarioConfig;

/// Integer tonnes, rounding halves away from zero.
pub fn tonnes(kg: f64) -> i64 {
    (kg / 1000.0).round() as i64
}

/// Percentage with one decimal, rounding halves away from zero.
pub fn percent(fraction: f64) -> String {
    format!("{:.1}%", (fraction * 1000.0).round() / 10.0)
}

fn thousands(value: i64) -> String {
    let digits = value.unsigned_abs().to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    if value < 0 {
        out.insert(0, '-');
    }
    out
}

/// Labelled rows in report order: parameters, then overhead, embodied,
/// baseline, the load-shifting total and the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub rows: Vec<(String, String)>,
}

impl ReportTable {
    pub fn new(config: &ScenarioConfig, report: &EmissionsReport) -> Self {
        let kg = |v: f64| thousands(v.round() as i64);
        let t = |v: f64| thousands(tonnes(v));
        let frac = |v: f64| format!("{v:.2}");
        let rows = vec![
            ("n_n", thousands(i64::from(config.hi.nodes_per_site))),
            ("n_hi", config.hi.site_count.to_string()),
            ("n_lo", config.lo.site_count.to_string()),
            (
                "Embodied carbon c_em (kgCO2e/y)",
                kg(config.hi.embodied_per_node_kg),
            ),
            (
                "Operational emissions, high-CI c_hi (kgCO2e/y)",
                kg(config.hi.op_full_per_node_kg),
            ),
            (
                "Operational emissions, low-CI c_lo (kgCO2e/y)",
                kg(config.lo.op_full_per_node_kg),
            ),
            ("lambda_hi", frac(config.hi.load)),
            ("lambda_lo", frac(config.lo.load)),
            ("gamma", frac(config.gamma)),
            ("alpha", frac(config.policy.alpha)),
            ("beta", frac(config.policy.beta)),
            ("eta", frac(config.policy.eta)),
            ("overhead (tCO2e/y)", t(report.overhead)),
            ("Embodied (tCO2e/y)", t(report.embodied_total)),
            ("Baseline (tCO2e/y)", t(report.baseline_total)),
            (
                "Geographic load shifting (tCO2e/y)",
                t(report.blended_total),
            ),
            ("Emission reduction (%)", percent(report.reduction)),
        ];
        Self {
            title: config.name.clone(),
            rows: rows.into_iter().map(|(l, v)| (l.to_string(), v)).collect(),
        }
    }

    pub fn value(&self, label: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for ReportTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_width = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let value_width = self.rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        writeln!(f, "{}", self.title)?;
        for (label, value) in &self.rows {
            writeln!(f, "{label:<label_width$}  {value:>value_width$}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Tonnes as integers and the reduction with one decimal.
    Rounded,
    /// Unrounded kilograms and percentage.
    Full,
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Header and single data row for one evaluated scenario.
pub fn evaluation_csv(
    config: &ScenarioConfig,
    report: &EmissionsReport,
    precision: Precision,
) -> String {
    let values = [
        report.overhead,
        report.embodied_total,
        report.baseline_total,
        report.gls_total,
        report.blended_total,
    ];
    let (header, row) = match precision {
        Precision::Rounded => (
            "name,alpha_eff,overhead_t,embodied_t,baseline_t,gls_t,blended_t,reduction_pct",
            format!(
                "{},{:.4},{},{:.1}",
                csv_field(&config.name),
                report.alpha_eff,
                values.map(|v| tonnes(v).to_string()).join(","),
                (report.reduction * 1000.0).round() / 10.0
            ),
        ),
        Precision::Full => (
            "name,alpha_eff,overhead_kg,embodied_kg,baseline_kg,gls_kg,blended_kg,reduction_pct",
            format!(
                "{},{},{},{}",
                csv_field(&config.name),
                report.alpha_eff,
                values.map(|v| v.to_string()).join(","),
                report.reduction * 100.0
            ),
        ),
    };
    format!("{header}\n{row}\n")
}
