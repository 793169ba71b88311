use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::affine::{affine_resample, AffineMatrix};
use super::intensity::{normalize_integral, normalize_max, DEFAULT_TOP_FRACTION};
use crate::error::{Error, Result};
use crate::tensor::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intensity {
    No,
    Int,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spatial {
    /// No registration.
    U,
    /// Warped through a supplied registration transform.
    W,
}

/// Preprocessing combination, rendered `no_u`, `int_w`, `max_u`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PipelineTag {
    pub intensity: Intensity,
    pub spatial: Spatial,
}

impl PipelineTag {
    pub const fn new(intensity: Intensity, spatial: Spatial) -> Self {
        PipelineTag { intensity, spatial }
    }

    /// All six combinations in table order.
    pub fn all() -> [PipelineTag; 6] {
        use Intensity::*;
        use Spatial::*;
        [(No, W), (Max, W), (Int, W), (No, U), (Max, U), (Int, U)].map(|(i, s)| PipelineTag::new(i, s))
    }
}

impl fmt::Display for PipelineTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self.intensity {
            Intensity::No => "no",
            Intensity::Int => "int",
            Intensity::Max => "max",
        };
        let s = match self.spatial {
            Spatial::U => "u",
            Spatial::W => "w",
        };
        write!(f, "{i}_{s}")
    }
}

impl FromStr for PipelineTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (i, sp) = s
            .trim()
            .split_once('_')
            .ok_or_else(|| Error::Parse(format!("pipeline tag '{s}' is not <no|int|max>_<u|w>")))?;
        let intensity = match i {
            "no" => Intensity::No,
            "int" => Intensity::Int,
            "max" => Intensity::Max,
            _ => return Err(Error::Parse(format!("unknown intensity step '{i}' in tag '{s}'"))),
        };
        let spatial = match sp {
            "u" => Spatial::U,
            "w" => Spatial::W,
            _ => return Err(Error::Parse(format!("unknown spatial step '{sp}' in tag '{s}'"))),
        };
        Ok(PipelineTag { intensity, spatial })
    }
}

/// Spatial step (for `w`) followed by the intensity step.
pub fn apply_pipeline(v: &Volume, tag: PipelineTag, registration: Option<&AffineMatrix>) -> Result<Volume> {
    let spatial = match tag.spatial {
        Spatial::U => v.clone(),
        Spatial::W => {
            let a = registration.ok_or_else(|| {
                Error::InvalidArgument(format!("pipeline {tag} needs a registration transform"))
            })?;
            affine_resample(v, a, v.dims())?
        }
    };
    match tag.intensity {
        Intensity::No => Ok(spatial),
        Intensity::Int => normalize_integral(&spatial),
        Intensity::Max => normalize_max(&spatial, DEFAULT_TOP_FRACTION),
    }
}
