//! Result directories written by a training run, and the merged report.
//!
//! A run directory holds
//! - `config.txt`: the experiment config that produced it
//! - `folds.csv`: `fold,acc,sens,spec,f1,bal_acc` (undefined ratios as `nan`)
//! - `roc.csv`: pooled `fpr,tpr` points
//! - `scores.csv`: `subject_id,label,fold,score` for every held-out sample
//! - `history_fold{i}.csv`: `epoch,mean_loss,train_accuracy`
//! - `summary.csv`: one row in `mean [std]` format
//! - `fold{i}.pdw`: trained weights

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::checkpoint::save_checkpoint;
use super::config::ExperimentConfig;
use super::manifest::into_string;
use super::svg::{band_plot, box_plot, roc_overlay, BoxGroup, PALETTE};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::eval::{format_metric, CvReport, Image2d, MetricSummary, MetricsReport, RocCurve, Summary};
use crate::preprocess::{PipelineTag, Spatial};
use crate::train::{EpochStats, LossKind};

pub const FOLDS_FILE: &str = "folds.csv";
pub const ROC_FILE: &str = "roc.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.txt";

pub fn history_file(fold: usize) -> String {
    format!("history_fold{fold}.csv")
}

pub fn checkpoint_file(fold: usize) -> String {
    format!("fold{fold}.pdw")
}

fn parse_metric(s: &str) -> Result<Option<f64>> {
    match s.trim() {
        "nan" | "NaN" => Ok(None),
        v => v.parse().map(Some).map_err(|e| Error::Parse(format!("metric '{v}': {e}"))),
    }
}

/// Full precision, so recomputed summaries agree with the in-memory ones.
fn metric_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "nan".into())
}

pub fn folds_csv(reports: &[MetricsReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["fold"];
    header.extend(MetricsReport::NAMES);
    w.write_record(&header)?;
    for (i, r) in reports.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(r.values().iter().map(|&v| metric_cell(v)));
        w.write_record(&rec)?;
    }
    into_string(w)
}

pub fn parse_folds_csv(text: &str) -> Result<Vec<MetricsReport>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 6 {
            return Err(Error::Parse(format!("folds row has {} fields, expected 6", rec.len())));
        }
        let mut v = [None; 5];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = parse_metric(&rec[i + 1])?;
        }
        out.push(MetricsReport::from_values(v));
    }
    Ok(out)
}

pub fn roc_csv(roc: &RocCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fpr", "tpr"])?;
    for (x, y) in &roc.points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    into_string(w)
}

/// Points back into a curve; the area is recomputed by the trapezoid rule.
pub fn parse_roc_csv(text: &str) -> Result<RocCurve> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut points = Vec::new();
    for rec in rdr.deserialize::<(f64, f64)>() {
        points.push(rec?);
    }
    if points.len() < 2 {
        return Err(Error::Parse("ROC needs at least two points".into()));
    }
    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(RocCurve { points, auc })
}

pub fn history_csv(history: &[EpochStats]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "mean_loss", "train_accuracy"])?;
    for h in history {
        w.write_record([h.epoch.to_string(), h.mean_loss.to_string(), h.train_accuracy.to_string()])?;
    }
    into_string(w)
}

pub fn parse_history_csv(text: &str) -> Result<Vec<EpochStats>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<EpochStats>().map(|r| r.map_err(Error::from)).collect()
}

const SUMMARY_HEADER: [&str; 9] = ["run", "tag", "loss", "acc", "sens", "spec", "f1", "bal_acc", "auc"];

fn summary_record(name: &str, tag: PipelineTag, loss: LossKind, summary: &Summary, auc: f64) -> Vec<String> {
    let mut rec = vec![name.to_string(), tag.to_string(), loss.short().to_string()];
    rec.extend(summary.columns().iter().map(|c| c.to_string()));
    rec.push(format!("{auc:.3}"));
    rec
}

/// Writes every artifact of a finished cross-validation run into `dir`.
pub fn write_run(dir: &Path, config: &ExperimentConfig, report: &CvReport, subject_ids: &[String], labels: &[crate::Label]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join(CONFIG_FILE), config.to_text().as_bytes())?;
    let reports: Vec<MetricsReport> = report.folds.iter().map(|f| f.metrics).collect();
    write_atomic(&dir.join(FOLDS_FILE), folds_csv(&reports)?.as_bytes())?;
    write_atomic(&dir.join(ROC_FILE), roc_csv(&report.pooled_roc)?.as_bytes())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["subject_id", "label", "fold", "score"])?;
    for f in &report.folds {
        for (&i, s) in f.test_indices.iter().zip(&f.scores) {
            w.write_record([subject_ids[i].clone(), labels[i].to_string(), f.fold.to_string(), s.to_string()])?;
        }
    }
    write_atomic(&dir.join(SCORES_FILE), into_string(w)?.as_bytes())?;
    let digest = config.digest();
    for f in &report.folds {
        write_atomic(&dir.join(history_file(f.fold)), history_csv(&f.history)?.as_bytes())?;
        save_checkpoint(&dir.join(checkpoint_file(f.fold)), &f.model, digest)?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    let name = run_name(config.tag, config.loss);
    w.write_record(summary_record(&name, config.tag, config.loss, &report.summary, report.pooled_roc.auc))?;
    write_atomic(&dir.join(SUMMARY_FILE), into_string(w)?.as_bytes())?;
    Ok(())
}

pub fn run_name(tag: PipelineTag, loss: LossKind) -> String {
    format!("{tag} {}", loss.short())
}

/// Everything the report needs from one run directory.
#[derive(Debug, Clone)]
pub struct RunResults {
    pub dir: PathBuf,
    pub tag: PipelineTag,
    pub loss: LossKind,
    pub folds: Vec<MetricsReport>,
    pub roc: RocCurve,
    pub histories: Vec<Vec<EpochStats>>,
}

impl RunResults {
    pub fn name(&self) -> String {
        run_name(self.tag, self.loss)
    }

    pub fn summary(&self) -> Summary {
        Summary::from_reports(&self.folds)
    }
}

pub fn load_run(dir: &Path) -> Result<RunResults> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name));
    let config = ExperimentConfig::parse(&read(CONFIG_FILE)?)?;
    let folds = parse_folds_csv(&read(FOLDS_FILE)?)?;
    if folds.is_empty() {
        return Err(Error::Empty(format!("{} has no folds", dir.display())));
    }
    let roc = parse_roc_csv(&read(ROC_FILE)?)?;
    let histories = (0..folds.len())
        .map(|i| parse_history_csv(&read(&history_file(i))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResults { dir: dir.to_path_buf(), tag: config.tag, loss: config.loss, folds, roc, histories })
}

/// `dir` itself when it is a run directory, otherwise its immediate
/// subdirectories that are, in name order.
pub fn discover_runs(dir: &Path) -> Result<Vec<RunResults>> {
    if dir.join(FOLDS_FILE).is_file() {
        return Ok(vec![load_run(dir)?]);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(FOLDS_FILE).is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::Empty(format!("no run results under {}", dir.display())));
    }
    subdirs.iter().map(|p| load_run(p)).collect()
}

/// Per-epoch `(mean, std)` of training accuracy across folds.
pub fn accuracy_band(histories: &[Vec<EpochStats>]) -> Vec<(f64, f64)> {
    let n = histories.iter().map(|h| h.len()).min().unwrap_or(0);
    (0..n)
        .map(|e| {
            let vals: Vec<Option<f64>> = histories.iter().map(|h| Some(h[e].train_accuracy)).collect();
            let s = MetricSummary::from_values(&vals);
            (s.mean.unwrap_or(0.0), s.std.unwrap_or(0.0))
        })
        .collect()
}

/// Markdown comparison table, one row per run, cells "mean [std]".
pub fn comparison_table(runs: &[RunResults]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| run | acc | sens | spec | f1 | bal_acc | auc |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for r in runs {
        let s = r.summary();
        let cells: Vec<String> = s.columns().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "| {} | {} | {:.3} |", r.name(), cells.join(" | "), r.roc.auc);
    }
    out
}

/// Files written by [`write_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub table: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Writes the table to `out` and the SVG plots beside it as
/// `<stem>_accuracy.svg`, `<stem>_roc.svg` and, with two or more runs,
/// `<stem>_boxplot.svg`.
pub fn write_report(runs: &[RunResults], out: &Path) -> Result<ReportFiles> {
    if runs.is_empty() {
        return Err(Error::Empty("no runs to report".into()));
    }
    write_atomic(out, comparison_table(runs).as_bytes())?;
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let sibling = |suffix: &str| out.with_file_name(format!("{stem}_{suffix}.svg"));
    let mut plots = Vec::new();

    let bands: Vec<(String, Vec<(f64, f64)>)> = runs.iter().map(|r| (r.name(), accuracy_band(&r.histories))).collect();
    let p = sibling("accuracy");
    write_atomic(&p, band_plot("Training accuracy (mean and std over folds)", &bands).as_bytes())?;
    plots.push(p);

    let curves: Vec<(String, Vec<(f64, f64)>)> =
        runs.iter().map(|r| (format!("{} (AUC {:.3})", r.name(), r.roc.auc), r.roc.points.clone())).collect();
    let p = sibling("roc");
    write_atomic(&p, roc_overlay("ROC", &curves).as_bytes())?;
    plots.push(p);

    if runs.len() >= 2 {
        let mut ordered: Vec<&RunResults> = runs.iter().collect();
        ordered.sort_by_key(|r| (r.tag.intensity as u8, r.tag.spatial as u8, r.loss.short()));
        let boxes: Vec<BoxGroup> = ordered
            .iter()
            .map(|r| BoxGroup {
                group: r.tag.to_string().split('_').next().unwrap_or("").to_string(),
                label: r.name(),
                color: match r.tag.spatial {
                    Spatial::U => PALETTE[0],
                    Spatial::W => PALETTE[1],
                },
                values: r.folds.iter().filter_map(|f| f.acc).collect(),
            })
            .collect();
        let p = sibling("boxplot");
        write_atomic(&p, box_plot("Per-fold accuracy", "accuracy", &boxes).as_bytes())?;
        plots.push(p);
    }
    Ok(ReportFiles { table: out.to_path_buf(), plots })
}

/// Binary 8-bit PGM scaled to the image maximum.
pub fn pgm_bytes(img: &Image2d) -> Vec<u8> {
    let max = img.pixels.iter().fold(0.0f32, |m, &v| m.max(v));
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|&v| super::svg::grey(v, max)));
    out
}

/// `0.941 [0.020]`, re-exported for callers formatting their own tables.
pub fn format_summary(mean: Option<f64>, std: Option<f64>) -> String {
    format!("{} [{}]", format_metric(mean), format_metric(std))
}
