use std::fmt::Write as _;
use std::str::FromStr;

use super::metrics::impact_pct;
use super::scenario::{AttackKind, EvalReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "noise_model",
    "attack_class",
    "accuracy",
    "precision",
    "precision_defined",
    "recall",
    "f1",
    "auc",
    "degenerate",
];

/// Reports sorted by noise model, then attack class.
pub fn ordered(reports: &[EvalReport]) -> Vec<&EvalReport> {
    let mut out: Vec<&EvalReport> = reports.iter().collect();
    out.sort_by(|a, b| {
        (a.scenario.noise_model.as_str(), a.scenario.attack_class)
            .cmp(&(b.scenario.noise_model.as_str(), b.scenario.attack_class))
    });
    out
}

pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to render".into()));
    }
    match format {
        ReportFormat::Table => Ok(render_table(&ordered(reports))),
        ReportFormat::Csv => render_csv(&ordered(reports)),
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "N.A.".to_owned(), |x| format!("{x:.digits$}"))
}

fn render_table(rows: &[&EvalReport]) -> String {
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 7]| {
        let _ = writeln!(
            out,
            "{:<12} {:<9} {:>9} {:>10} {:>8} {:>8} {:>8}",
            cells[0], cells[1], cells[2], cells[3], cells[4], cells[5], cells[6]
        );
    };
    line(&mut out, ["Noise-model", "Attack", "Accuracy", "Precision", "Recall", "F1", "AUC"]);
    let mut footnote = false;
    for r in rows {
        let m = &r.metrics;
        let precision = match m.precision {
            Some(p) => format!("{p:.2}"),
            None => {
                footnote = true;
                "0.00*".to_owned()
            }
        };
        line(
            &mut out,
            [
                &r.scenario.noise_model,
                r.scenario.attack_class.label(),
                &format!("{:.2}", m.accuracy_pct),
                &precision,
                &format!("{:.2}", m.recall),
                &format!("{:.4}", m.f1),
                &opt(m.auc, 4),
            ],
        );
        if r.scenario.attack_class == AttackKind::None {
            continue;
        }
        let benign = rows
            .iter()
            .find(|b| b.scenario.noise_model == r.scenario.noise_model && b.scenario.attack_class == AttackKind::None);
        if let Some(b) = benign {
            let bm = &b.metrics;
            let imp = |x: Option<f64>, y: Option<f64>| opt(x.zip(y).and_then(|(x, y)| impact_pct(x, y)), 2);
            line(
                &mut out,
                [
                    "",
                    "Impact(%)",
                    &imp(Some(bm.accuracy_pct), Some(m.accuracy_pct)),
                    &imp(bm.precision, Some(m.precision_display())),
                    &imp(Some(bm.recall), Some(m.recall)),
                    &imp(Some(bm.f1), Some(m.f1)),
                    &imp(bm.auc, m.auc),
                ],
            );
        }
    }
    if footnote {
        out.push_str("* precision undefined: no positive predictions\n");
    }
    out
}

fn render_csv(rows: &[&EvalReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.scenario.noise_model.clone(),
            r.scenario.attack_class.label().to_owned(),
            m.accuracy_pct.to_string(),
            m.precision_display().to_string(),
            m.precision.is_some().to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.auc.map_or_else(String::new, |a| a.to_string()),
            m.degenerate_prediction.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
