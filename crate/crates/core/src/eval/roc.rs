use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

/// ROC staircase as `(1 - specificity, sensitivity)` points from `(0, 0)` to
/// `(1, 1)`, with its trapezoidal area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold down through the sorted unique scores (PD probability,
/// higher means more PD). Equal scores move the curve in a single diagonal
/// step.
pub fn roc_and_auc(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {i}")));
    }
    let pos = labels.iter().filter(|&&l| l == Label::Pd).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("ROC needs samples of both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            match labels[order[i]] {
                Label::Pd => tp += 1,
                Label::Control => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(RocCurve { points, auc })
}

/// Fraction of (PD, control) pairs ranked correctly, ties counted as half.
pub fn mann_whitney_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == Label::Pd).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == Label::Control).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("need samples of both classes".into()));
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}
