use std::path::Path;

use pdnet_core::eval::{saliency_map, saliency_projection};
use pdnet_core::experiment::{preprocess_manifest, run_experiment};
use pdnet_core::io::checkpoint::load_checkpoint;
use pdnet_core::io::config::ExperimentConfig;
use pdnet_core::io::nvol::{read_nvol, write_nvol};
use pdnet_core::io::report::{discover_runs, pgm_bytes, write_report};
use pdnet_core::io::{svg, write_atomic};
use pdnet_core::phantom::{generate_dataset, PhantomParams};
use pdnet_core::Result;

use crate::{GenerateArgs, PreprocessArgs, ReportArgs, SaliencyArgs, TrainArgs};

pub fn phantom_generate(a: GenerateArgs) -> Result<()> {
    let params = a.shape.map(PhantomParams::with_shape).unwrap_or_default();
    let recs = generate_dataset(&params, a.n_control as usize, a.n_pd as usize, a.seed, &a.out)?;
    println!("wrote {} subjects to {}", recs.len(), a.out.display());
    Ok(())
}

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    let rows = preprocess_manifest(&a.manifest, a.tag, a.transforms.as_deref(), &a.out)?;
    println!("preprocessed {} volumes with {}", rows.len(), a.tag);
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for (k, v) in a.overrides() {
        cfg.set(k, v)?;
    }
    if let Some(out) = &a.out {
        cfg.out = out.clone();
    }
    // paths written in a config file are relative to that file
    if let Some(dir) = a.config.as_deref().and_then(Path::parent) {
        if a.manifest.is_none() && cfg.manifest.is_relative() {
            cfg.manifest = dir.join(&cfg.manifest);
        }
        if a.transforms.is_none() {
            if let Some(t) = cfg.transforms.as_mut().filter(|t| t.is_relative()) {
                *t = dir.join(&*t);
            }
        }
    }
    let report = run_experiment(&cfg)?;
    let s = &report.summary;
    println!(
        "{} {}: acc {} sens {} spec {} f1 {} bal_acc {} auc {:.3}",
        cfg.tag,
        cfg.loss.short(),
        s.acc,
        s.sens,
        s.spec,
        s.f1,
        s.balanced_acc,
        report.pooled_roc.auc
    );
    Ok(())
}

pub fn saliency(a: SaliencyArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let v = read_nvol(&a.volume)?;
    let map = saliency_map(&ck.model, &v, a.class as usize)?;
    let proj = saliency_projection(&map)?;
    std::fs::create_dir_all(&a.out)?;
    write_nvol(&a.out.join("saliency.nvol"), &map)?;
    write_atomic(&a.out.join("saliency_axial.pgm"), &pgm_bytes(&proj))?;
    write_atomic(&a.out.join("saliency_axial.svg"), svg::image_svg(&proj).as_bytes())?;
    println!("saliency for class {} written to {}", a.class, a.out.display());
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let runs = discover_runs(&a.results)?;
    let files = write_report(&runs, &a.out)?;
    println!("{} runs -> {} ({} plots)", runs.len(), files.table.display(), files.plots.len());
    Ok(())
}
