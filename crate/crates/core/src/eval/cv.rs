use serde::{Deserialize, Serialize};

use super::folds::{stratified_folds, FoldAssignment};
use super::metrics::{confusion, format_metric, metrics, ConfusionMatrix, MetricsReport};
use super::roc::{roc_and_auc, RocCurve};
use crate::error::{Error, Result};
use crate::model::{ArchitectureSpec, Model};
use crate::preprocess::PipelineTag;
use crate::seed;
use crate::tensor::{Tensor, Volume};
use crate::train::{fit, EpochStats, TrainConfig};
use crate::Label;

/// Preprocessed samples ready for training, each a `(1, D, H, W)` tensor.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub inputs: Vec<Tensor>,
    pub labels: Vec<Label>,
    pub subject_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn from_volumes(volumes: Vec<Volume>, labels: Vec<Label>, subject_ids: Vec<String>) -> Result<Self> {
        if volumes.len() != labels.len() || volumes.len() != subject_ids.len() {
            return Err(Error::ShapeMismatch("volumes, labels and ids differ in length".into()));
        }
        let inputs = volumes
            .into_iter()
            .map(|v| {
                let [d, h, w] = v.dims();
                v.into_tensor().reshape(&[1, d, h, w])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset { inputs, labels, subject_ids })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub history: Vec<EpochStats>,
    /// Held-out sample indices with their PD probabilities.
    pub test_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub model: Model,
}

/// Mean and population standard deviation of one metric over folds. Folds
/// where the metric is undefined are left out; all-undefined gives `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl MetricSummary {
    pub fn from_values(values: &[Option<f64>]) -> Self {
        let v: Vec<f64> = values.iter().flatten().copied().collect();
        if v.is_empty() {
            return MetricSummary { mean: None, std: None };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MetricSummary { mean: Some(mean), std: Some(var.sqrt()) }
    }
}

impl std::fmt::Display for MetricSummary {
    /// `0.941 [0.020]`
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{}]", format_metric(self.mean), format_metric(self.std))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub acc: MetricSummary,
    pub sens: MetricSummary,
    pub spec: MetricSummary,
    pub f1: MetricSummary,
    pub balanced_acc: MetricSummary,
}

impl Summary {
    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        let col = |i: usize| MetricSummary::from_values(&reports.iter().map(|r| r.values()[i]).collect::<Vec<_>>());
        Summary { acc: col(0), sens: col(1), spec: col(2), f1: col(3), balanced_acc: col(4) }
    }

    pub fn columns(&self) -> [MetricSummary; 5] {
        [self.acc, self.sens, self.spec, self.f1, self.balanced_acc]
    }
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub tag: PipelineTag,
    pub assignment: FoldAssignment,
    pub folds: Vec<FoldResult>,
    pub pooled_roc: RocCurve,
    pub summary: Summary,
}

/// Stratified k-fold cross-validation. Fold `i` builds its model and trains
/// with `derive(seed, "fold", i)`; the training config's own seed is ignored.
pub fn cross_validate(
    dataset: &LabeledDataset,
    arch: &ArchitectureSpec,
    config: &TrainConfig,
    tag: PipelineTag,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    config.validate()?;
    arch.validate()?;
    let assignment = stratified_folds(&dataset.labels, k, seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut pooled_scores = Vec::with_capacity(dataset.len());
    let mut pooled_labels = Vec::with_capacity(dataset.len());
    for fold in 0..k {
        let fold_seed = seed::derive(seed, "fold", fold as u64);
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);
        let xs: Vec<Tensor> = train_idx.iter().map(|&i| dataset.inputs[i].clone()).collect();
        let ys: Vec<Label> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
        let cfg = TrainConfig { seed: fold_seed, ..config.clone() };
        let model = Model::build(arch.clone(), fold_seed)?;
        let (model, history) = fit(model, &xs, &ys, &cfg).map_err(|e| match e {
            Error::NonFinite(m) => Error::NonFinite(format!("fold {fold}: {m}")),
            other => other,
        })?;
        let mut scores = Vec::with_capacity(test_idx.len());
        let mut preds = Vec::with_capacity(test_idx.len());
        let mut truth = Vec::with_capacity(test_idx.len());
        for &i in &test_idx {
            let p = model.predict_proba(&dataset.inputs[i], crate::Mode::Infer, 0)?;
            scores.push(p[1] as f64);
            preds.push(if p[1] > p[0] { Label::Pd } else { Label::Control });
            truth.push(dataset.labels[i]);
        }
        let cm = confusion(&preds, &truth)?;
        pooled_scores.extend(&scores);
        pooled_labels.extend(&truth);
        folds.push(FoldResult {
            fold,
            confusion: cm,
            metrics: metrics(&cm)?,
            history,
            test_indices: test_idx,
            scores,
            model,
        });
    }
    let pooled_roc = roc_and_auc(&pooled_scores, &pooled_labels)?;
    let summary = Summary::from_reports(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    Ok(CvReport { tag, assignment, folds, pooled_roc, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActivationFamily, ArchName, LayerSpec};
    use rand::Rng;

    fn toy() -> (LabeledDataset, ArchitectureSpec) {
        let mut rng = seed::rng(11);
        let mut vols = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let l = if i % 2 == 0 { Label::Control } else { Label::Pd };
            let level = if l == Label::Control { 1.0 } else { 0.2 };
            vols.push(Volume::new([5, 5, 5], (0..125).map(|_| level + rng.gen_range(-0.05..0.05)).collect()).unwrap());
            labels.push(l);
        }
        let ids = (0..20).map(|i| format!("s{i}")).collect();
        let spec = ArchitectureSpec {
            name: ArchName::Custom,
            family: ActivationFamily::Selu,
            input_shape: [5, 5, 5],
            layers: vec![
                LayerSpec::Conv { filters: 2, kernel: 3, stride: [1; 3], padding: [0; 3] },
                LayerSpec::Dense { units: 4, dropout: None },
            ],
            classes: 2,
        };
        (LabeledDataset::from_volumes(vols, labels, ids).unwrap(), spec)
    }

    #[test]
    fn summary_matches_recomputation_and_runs_repeat() {
        let (data, spec) = toy();
        let cfg = TrainConfig { epochs: 30, batch_size: 4, learning_rate: 1e-2, ..Default::default() };
        let tag: PipelineTag = "no_u".parse().unwrap();
        let a = cross_validate(&data, &spec, &cfg, tag, 4, 9).unwrap();
        let accs: Vec<f64> = a.folds.iter().map(|f| f.metrics.acc.unwrap()).collect();
        let mean = accs.iter().sum::<f64>() / 4.0;
        let std = (accs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((a.summary.acc.mean.unwrap() - mean).abs() < 1e-12);
        assert!((a.summary.acc.std.unwrap() - std).abs() < 1e-12);
        assert_eq!(a.summary.acc.to_string(), "1.000 [0.000]");
        assert_eq!(a.pooled_roc.points.first(), Some(&(0.0, 0.0)));
        let b = cross_validate(&data, &spec, &cfg, tag, 4, 9).unwrap();
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert_eq!(x.metrics, y.metrics);
            assert_eq!(x.scores, y.scores);
        }
    }

    #[test]
    fn summary_skips_undefined_folds() {
        let s = MetricSummary::from_values(&[Some(0.5), None, Some(1.0)]);
        assert_eq!(s.mean, Some(0.75));
        assert_eq!(s.std, Some(0.25));
        assert_eq!(MetricSummary::from_values(&[None]).to_string(), "nan [nan]");
    }
}
