use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::predict;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Classification metrics at a fixed threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy_pct: f64,
    /// `None` when nothing was predicted positive.
    pub precision: Option<f64>,
    /// 0 when the labels hold no positives.
    pub recall: f64,
    pub f1: f64,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    pub confusion: Confusion,
    pub degenerate_prediction: bool,
}

impl Metrics {
    /// Precision as displayed: 0.00 when undefined.
    pub fn precision_display(&self) -> f64 {
        self.precision.unwrap_or(0.0)
    }
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to evaluate".into()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(())
}

pub fn confusion(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Confusion> {
    check_lengths(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (predict(s, threshold), y) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// Metrics from confusion counts alone (AUC left undefined).
pub fn metrics_from_confusion(c: Confusion) -> Metrics {
    let n = c.total() as f64;
    let precision = (c.tp + c.fp > 0).then(|| c.tp as f64 / (c.tp + c.fp) as f64);
    let recall = if c.tp + c.fn_ > 0 {
        c.tp as f64 / (c.tp + c.fn_) as f64
    } else {
        0.0
    };
    let f1 = match precision {
        Some(p) if p + recall > 0.0 => 2.0 * p * recall / (p + recall),
        _ => 0.0,
    };
    Metrics {
        accuracy_pct: 100.0 * (c.tp + c.tn) as f64 / n,
        precision,
        recall,
        f1,
        auc: None,
        confusion: c,
        degenerate_prediction: c.tp + c.fp == 0 || c.tn + c.fn_ == 0,
    }
}

pub fn compute_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Metrics> {
    let c = confusion(scores, labels, threshold)?;
    let mut m = metrics_from_confusion(c);
    m.auc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(m)
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half, from average ranks.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// `100·(benign − attacked)/benign`, `None` when the benign value is 0.
pub fn impact_pct(benign: f64, attacked: f64) -> Option<f64> {
    (benign != 0.0).then(|| 100.0 * (benign - attacked) / benign)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_pair() {
        let m = compute_metrics(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        assert_eq!(m.accuracy_pct, 100.0);
        assert_eq!(m.precision, Some(1.0));
        assert_eq!((m.recall, m.f1, m.auc), (1.0, 1.0, Some(1.0)));
        assert!(!m.degenerate_prediction);
    }

    #[test]
    fn all_negative_predictions() {
        let m = compute_metrics(&[0.1; 4], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(m.accuracy_pct, 50.0);
        assert_eq!(m.precision, None);
        assert_eq!(m.precision_display(), 0.0);
        assert_eq!((m.recall, m.f1), (0.0, 0.0));
        assert!(m.degenerate_prediction);
        assert_eq!(m.auc, Some(0.5));
    }

    #[test]
    fn hand_confusion() {
        let m = metrics_from_confusion(Confusion {
            tp: 4,
            fp: 0,
            fn_: 6,
            tn: 10,
        });
        assert_eq!(m.accuracy_pct, 70.0);
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, 0.4);
        assert!((m.f1 - 0.8 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn auc_cases() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.7, 0.2];
        let y = [0, 0, 1, 1, 1, 0];
        assert!((roc_auc(&s, &y).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(roc_auc(&[0.3, 0.4], &[1, 1]), Err(Error::UndefinedMetric(_))));
        assert!(roc_auc(&[0.3], &[1, 0]).is_err());
    }

    #[test]
    fn impact_examples() {
        assert!((impact_pct(65.0, 57.0).unwrap() - 12.307692307692308).abs() < 1e-12);
        assert_eq!(impact_pct(0.4, 0.0), Some(100.0));
        assert_eq!(impact_pct(0.0, 0.3), None);
    }
}
