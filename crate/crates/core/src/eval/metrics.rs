use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

/// Counts with PD as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (Label::Pd, Label::Pd) => cm.tp += 1,
            (Label::Control, Label::Control) => cm.tn += 1,
            (Label::Pd, Label::Control) => cm.fp += 1,
            (Label::Control, Label::Pd) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Scores derived from a confusion matrix. `None` marks a 0/0 ratio and is
/// rendered as `nan`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: Option<f64>,
    pub sens: Option<f64>,
    pub spec: Option<f64>,
    pub f1: Option<f64>,
    pub balanced_acc: Option<f64>,
}

impl MetricsReport {
    pub const NAMES: [&'static str; 5] = ["acc", "sens", "spec", "f1", "bal_acc"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.acc, self.sens, self.spec, self.f1, self.balanced_acc]
    }

    pub fn from_values(v: [Option<f64>; 5]) -> Self {
        MetricsReport { acc: v[0], sens: v[1], spec: v[2], f1: v[3], balanced_acc: v[4] }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no samples".into()));
    }
    let sens = ratio(cm.tp, cm.tp + cm.fn_);
    let spec = ratio(cm.tn, cm.tn + cm.fp);
    Ok(MetricsReport {
        acc: ratio(cm.tp + cm.tn, total),
        sens,
        spec,
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fn_ + cm.fp),
        balanced_acc: sens.zip(spec).map(|(a, b)| (a + b) / 2.0),
    })
}

/// Three decimals, or `nan`.
pub fn format_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "nan".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn perfect_classifier() {
        let cm = ConfusionMatrix { tp: 5, tn: 5, fp: 0, fn_: 0 };
        let m = metrics(&cm).unwrap();
        assert_eq!((m.acc, m.f1, m.balanced_acc), (Some(1.0), Some(1.0), Some(1.0)));
        let labels = [Label::Pd, Label::Control, Label::Pd];
        let cm = confusion(&labels, &labels).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
    }

    #[test]
    fn degenerate_all_control() {
        let mut labels = vec![Label::Control; 194];
        labels.extend(vec![Label::Pd; 448]);
        let cm = confusion(&vec![Label::Control; 642], &labels).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 0, fn_: 448, tn: 194, fp: 0 });
        let m = metrics(&cm).unwrap();
        assert_eq!(format_metric(m.acc), "0.302");
        assert_eq!(format_metric(m.sens), "0.000");
        assert_eq!(format_metric(m.spec), "1.000");
        assert_eq!(format_metric(m.balanced_acc), "0.500");
        assert_eq!(m.f1, Some(0.0));
    }

    #[test]
    fn undefined_ratios() {
        let m = metrics(&ConfusionMatrix { tp: 0, tn: 3, fp: 1, fn_: 0 }).unwrap();
        assert_eq!(m.sens, None);
        assert_eq!(m.balanced_acc, None);
        assert_eq!(format_metric(m.sens), "nan");
        assert!(metrics(&ConfusionMatrix::default()).is_err());
        assert!(confusion(&[Label::Pd], &[]).is_err());
    }

    #[test]
    fn random_tally() {
        let mut rng = crate::seed::rng(4);
        let pick = |r: &mut rand_chacha::ChaCha8Rng| if r.gen_bool(0.5) { Label::Pd } else { Label::Control };
        let p: Vec<Label> = (0..20).map(|_| pick(&mut rng)).collect();
        let y: Vec<Label> = (0..20).map(|_| pick(&mut rng)).collect();
        let cm = confusion(&p, &y).unwrap();
        let count = |a: Label, b: Label| p.iter().zip(&y).filter(|(&pp, &yy)| pp == a && yy == b).count();
        assert_eq!(cm.tp, count(Label::Pd, Label::Pd));
        assert_eq!(cm.tn, count(Label::Control, Label::Control));
        assert_eq!(cm.fp, count(Label::Pd, Label::Control));
        assert_eq!(cm.fn_, count(Label::Control, Label::Pd));
    }

    #[test]
    fn exhaustive_formula_sweep() {
        for tp in 0..=20 {
            for tn in 0..=20 {
                for fp in 0..=20usize {
                    for fn_ in 0..=20usize {
                        let cm = ConfusionMatrix { tp, tn, fp, fn_ };
                        let total = tp + tn + fp + fn_;
                        if total == 0 {
                            continue;
                        }
                        let m = metrics(&cm).unwrap();
                        assert_eq!(m.acc, Some((tp + tn) as f64 / total as f64));
                        let sens = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
                        let spec = (tn + fp > 0).then(|| tn as f64 / (tn + fp) as f64);
                        assert_eq!(m.sens, sens);
                        assert_eq!(m.spec, spec);
                        match (sens, spec) {
                            (Some(a), Some(b)) => assert_eq!(m.balanced_acc, Some((a + b) / 2.0)),
                            _ => assert_eq!(m.balanced_acc, None),
                        }
                        let den = 2 * tp + fn_ + fp;
                        assert_eq!(m.f1, (den > 0).then(|| 2.0 * tp as f64 / den as f64));
                    }
                }
            }
        }
    }
}
