//! End-to-end orchestration shared by the command line and the acceptance
//! suite: preprocessing a manifest, loading a training set, and running one
//! configured cross-validation into a results directory.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{cross_validate, CvReport, LabeledDataset};
use crate::io::config::ExperimentConfig;
use crate::io::manifest::{read_manifest, read_transforms, write_manifest, Manifest, ManifestRow, Transforms, MANIFEST_FILE};
use crate::io::nvol::{read_nvol, write_nvol};
use crate::io::report::write_run;
use crate::preprocess::{apply_pipeline, resample_to_input_shape, PipelineTag, Spatial};
use crate::tensor::Volume;

/// Registration table for `_w` tags; `None` for `_u`. A `_w` tag without a
/// table is an error.
pub fn load_transforms(path: Option<&Path>, tag: PipelineTag) -> Result<Option<Transforms>> {
    match (tag.spatial, path) {
        (Spatial::W, None) => Err(Error::InvalidArgument(format!("tag {tag} needs registration transforms"))),
        (Spatial::W, Some(p)) => Ok(Some(read_transforms(p)?)),
        (Spatial::U, _) => Ok(None),
    }
}

fn preprocess_volume(v: &Volume, subject: &str, tag: PipelineTag, transforms: Option<&Transforms>) -> Result<Volume> {
    let reg = match transforms {
        Some(t) => Some(t.get(subject).ok_or_else(|| Error::InvalidArgument(format!("no transform for {subject}")))?),
        None => None,
    };
    apply_pipeline(v, tag, reg)
}

/// Applies `tag` to every volume of `manifest`, writing `<id>.nvol` files
/// and a manifest with a provenance column into `out`.
pub fn preprocess_manifest(
    manifest: &Path,
    tag: PipelineTag,
    transforms: Option<&Path>,
    out: &Path,
) -> Result<Vec<ManifestRow>> {
    let manifest = read_manifest(manifest)?;
    if let Some(p) = manifest.rows.iter().find_map(|r| r.provenance.as_deref()) {
        return Err(Error::InvalidArgument(format!("manifest is already preprocessed ({p})")));
    }
    let transforms = load_transforms(transforms, tag)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(manifest.rows.len());
    for row in &manifest.rows {
        let v = read_nvol(&manifest.resolve(row))?;
        let processed = preprocess_volume(&v, &row.subject_id, tag, transforms.as_ref())?;
        let file = format!("{}.nvol", row.subject_id);
        write_nvol(&out.join(&file), &processed)?;
        let mut r = row.clone();
        r.path = file;
        r.provenance = Some(tag.to_string());
        rows.push(r);
    }
    write_manifest(&out.join(MANIFEST_FILE), &rows)?;
    Ok(rows)
}

/// Loads every volume of `manifest`, applying the config's pipeline unless
/// the manifest was already preprocessed with it, and resampling to the
/// configured input shape (default: the first volume's shape).
pub fn load_dataset(cfg: &ExperimentConfig, manifest: &Manifest) -> Result<(LabeledDataset, [usize; 3])> {
    let provenance = manifest.rows[0].provenance.clone();
    if manifest.rows.iter().any(|r| r.provenance != provenance) {
        return Err(Error::InvalidArgument("manifest mixes preprocessing pipelines".into()));
    }
    let transforms = match &provenance {
        Some(p) if *p == cfg.tag.to_string() => None,
        Some(p) => {
            return Err(Error::InvalidArgument(format!(
                "manifest was preprocessed with {p}, config asks for {}",
                cfg.tag
            )))
        }
        None => load_transforms(cfg.transforms.as_deref(), cfg.tag)?,
    };
    let mut volumes = Vec::with_capacity(manifest.rows.len());
    let mut shape = cfg.input_shape;
    for row in &manifest.rows {
        let mut v = read_nvol(&manifest.resolve(row))?;
        if provenance.is_none() {
            v = preprocess_volume(&v, &row.subject_id, cfg.tag, transforms.as_ref())?;
        }
        let target = *shape.get_or_insert(v.dims());
        if v.dims() != target {
            v = resample_to_input_shape(&v, target)?;
        }
        volumes.push(v);
    }
    let ids = manifest.rows.iter().map(|r| r.subject_id.clone()).collect();
    let shape = shape.expect("manifest has at least one row");
    Ok((LabeledDataset::from_volumes(volumes, manifest.labels(), ids)?, shape))
}

/// Cross-validates the configured model and writes the run into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CvReport> {
    cfg.validate()?;
    let manifest = read_manifest(&cfg.manifest)?;
    let (dataset, shape) = load_dataset(cfg, &manifest)?;
    let arch = cfg.architecture(shape)?;
    let report = cross_validate(&dataset, &arch, &cfg.train_config()?, cfg.tag, cfg.folds, cfg.seed)?;
    write_run(&cfg.out, cfg, &report, &dataset.subject_ids, &dataset.labels)?;
    Ok(report)
}
