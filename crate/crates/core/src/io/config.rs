//! Flat `key = value` experiment configs. `#` starts a comment; blank lines
//! are ignored; unknown keys are errors.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ArchitectureSpec;
use crate::preprocess::PipelineTag;
use crate::train::{ClassWeighting, LossKind, OptimizerKind, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: String,
    pub width_scale: f64,
    /// `D x H x W`; defaults to the shape of the first volume.
    pub input_shape: Option<[usize; 3]>,
    pub tag: PipelineTag,
    pub loss: LossKind,
    pub folds: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub optimizer: String,
    pub class_weighting: ClassWeighting,
    pub seed: u64,
    pub manifest: PathBuf,
    pub transforms: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "alexnet3d".into(),
            width_scale: 1.0,
            input_shape: None,
            tag: "int_u".parse().expect("valid tag"),
            loss: LossKind::CrossEntropy,
            folds: 10,
            epochs: 60,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: "adam".into(),
            class_weighting: ClassWeighting::Inverse,
            seed: 0,
            manifest: PathBuf::from("manifest.csv"),
            transforms: None,
            out: PathBuf::from("results"),
        }
    }
}

pub const KEYS: [&str; 15] = [
    "model",
    "width_scale",
    "input_shape",
    "tag",
    "loss",
    "folds",
    "epochs",
    "batch_size",
    "learning_rate",
    "optimizer",
    "class_weighting",
    "seed",
    "manifest",
    "transforms",
    "out",
];

pub fn parse_shape(s: &str) -> Result<[usize; 3]> {
    let v: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|e| Error::Parse(format!("shape '{s}': {e}"))))
        .collect::<Result<_>>()?;
    match v[..] {
        [d, h, w] if d > 0 && h > 0 && w > 0 => Ok([d, h, w]),
        _ => Err(Error::Parse(format!("shape '{s}' is not DxHxW with positive extents"))),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::Parse(format!("{key} = {v}: {e}")))
}

fn weighting_name(w: ClassWeighting) -> &'static str {
    match w {
        ClassWeighting::Inverse => "inverse",
        ClassWeighting::Proportional => "proportional",
        ClassWeighting::Uniform => "uniform",
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model" => self.model = v.to_string(),
            "width_scale" => self.width_scale = num(key, v)?,
            "input_shape" => self.input_shape = if v.is_empty() { None } else { Some(parse_shape(v)?) },
            "tag" => self.tag = v.parse()?,
            "loss" => self.loss = v.parse()?,
            "folds" => self.folds = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "learning_rate" => self.learning_rate = num(key, v)?,
            "optimizer" => {
                v.parse::<OptimizerKind>()?;
                self.optimizer = v.to_string()
            }
            "class_weighting" => self.class_weighting = v.parse()?,
            "seed" => self.seed = num(key, v)?,
            "manifest" => self.manifest = PathBuf::from(v),
            "transforms" => self.transforms = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k, v).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture(self.input_shape.unwrap_or(crate::model::DEFAULT_INPUT_SHAPE))?;
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("folds = {}: need at least 2", self.folds)));
        }
        if !(self.width_scale > 0.0 && self.width_scale <= 1.0) {
            return Err(Error::InvalidArgument(format!("width_scale {} outside (0, 1]", self.width_scale)));
        }
        self.train_config()?.validate()
    }

    pub fn architecture(&self, input_shape: [usize; 3]) -> Result<ArchitectureSpec> {
        let mut spec = ArchitectureSpec::by_name(&self.model)?.with_input_shape(input_shape);
        if self.width_scale != 1.0 {
            spec = spec.with_width_scale(self.width_scale);
        }
        Ok(spec)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            loss: self.loss,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer.parse()?,
            class_weights: None,
            weighting: self.class_weighting,
            seed: self.seed,
        })
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let shape = self.input_shape.map(|[d, h, w]| format!("{d}x{h}x{w}")).unwrap_or_default();
        let path = |p: &Path| p.to_string_lossy().into_owned();
        let values = [
            self.model.clone(),
            self.width_scale.to_string(),
            shape,
            self.tag.to_string(),
            self.loss.to_string(),
            self.folds.to_string(),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.learning_rate.to_string(),
            self.optimizer.clone(),
            weighting_name(self.class_weighting).to_string(),
            self.seed.to_string(),
            path(&self.manifest),
            self.transforms.as_deref().map(path).unwrap_or_default(),
            path(&self.out),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the settings that determine the trained weights (paths
    /// excluded).
    pub fn digest(&self) -> [u8; 32] {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !["manifest", "transforms", "out"].iter().any(|k| l.starts_with(&format!("{k} "))))
            .map(|l| format!("{l}\n"))
            .collect();
        Sha256::digest(text.as_bytes()).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# run\nmodel = lenet53d-selu\ntag = max_w\nloss = lc\nfolds = 5\nepochs=3\n\ninput_shape = 24x28x24\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.tag.to_string(), "max_w");
        assert_eq!(cfg.loss, LossKind::Logcosh);
        assert_eq!(cfg.input_shape, Some([24, 28, 24]));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("tag = int_x").is_err());
        assert!(ExperimentConfig::parse("folds = 1").is_err());
        assert!(ExperimentConfig::parse("epochs = -3").is_err());
        assert!(ExperimentConfig::parse("model = vgg").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
    }

    #[test]
    fn digest_ignores_paths() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { out: "elsewhere".into(), ..a.clone() };
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }
}
