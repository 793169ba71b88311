use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Volume;

/// Fraction of brightest voxels averaged by max normalization.
pub const DEFAULT_TOP_FRACTION: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IntensityNormKind {
    None,
    Max { top_fraction: f64 },
    Integral,
}

/// `ceil(fraction * n)`, at least one voxel. The small slack keeps products
/// like `0.03 * 100` from rounding up to 4.
pub fn top_fraction_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
}

/// Mean of the `top_fraction_count` largest values.
pub fn top_fraction_mean(values: &[f32], fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("volume has no voxels".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("top fraction {fraction} outside (0, 1]")));
    }
    let k = top_fraction_count(values.len(), fraction);
    let mut buf = values.to_vec();
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    Ok(buf[..k].iter().map(|&v| v as f64).sum::<f64>() / k as f64)
}

fn divide(v: &Volume, by: f64, what: &str) -> Result<Volume> {
    if by == 0.0 || !by.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} normalization divisor is {by}")));
    }
    let data = v.data().iter().map(|&x| (x as f64 / by) as f32).collect();
    let mut out = Volume::new(v.dims(), data)?;
    out.voxel_size = v.voxel_size;
    Ok(out)
}

/// Divides by the mean of the brightest `top_fraction` of voxels.
pub fn normalize_max(v: &Volume, top_fraction: f64) -> Result<Volume> {
    let level = top_fraction_mean(v.data(), top_fraction)?;
    divide(v, level, "max")
}

/// Divides by the whole-volume mean.
pub fn normalize_integral(v: &Volume) -> Result<Volume> {
    if v.is_empty() {
        return Err(Error::Empty("volume has no voxels".into()));
    }
    divide(v, v.mean(), "integral")
}

pub fn normalize(v: &Volume, kind: IntensityNormKind) -> Result<Volume> {
    match kind {
        IntensityNormKind::None => Ok(v.clone()),
        IntensityNormKind::Max { top_fraction } => normalize_max(v, top_fraction),
        IntensityNormKind::Integral => normalize_integral(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_volume_becomes_ones() {
        let v = Volume::filled([3, 4, 5], 5.0).unwrap();
        assert!(normalize_max(&v, 0.03).unwrap().data().iter().all(|&x| x == 1.0));
        assert!(normalize_integral(&v).unwrap().data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn ramp_uses_top_three() {
        let v = Volume::new([1, 10, 10], (1..=100).map(|i| i as f32).collect()).unwrap();
        assert_eq!(top_fraction_count(100, 0.03), 3);
        assert_eq!(top_fraction_mean(v.data(), 0.03).unwrap(), 99.0);
        let out = normalize_max(&v, 0.03).unwrap();
        let max = out.data().iter().fold(f32::MIN, |m, &x| m.max(x));
        assert_eq!(max, (100.0f64 / 99.0) as f32);
    }

    #[test]
    fn two_voxel_integral() {
        let v = Volume::new([1, 1, 2], vec![2.0, 4.0]).unwrap();
        let out = normalize_integral(&v).unwrap();
        assert!((out.data()[0] - 0.666_666_7).abs() < 1e-6);
        assert!((out.data()[1] - 1.333_333_3).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let z = Volume::filled([2, 2, 2], 0.0).unwrap();
        assert!(normalize_max(&z, 0.03).is_err());
        assert!(normalize_integral(&z).is_err());
        let v = Volume::filled([2, 2, 2], 1.0).unwrap();
        assert!(normalize_max(&v, 0.0).is_err());
        assert!(normalize_max(&v, 1.5).is_err());
    }

    fn volume_strategy() -> impl Strategy<Value = Volume> {
        (1usize..6, 1usize..6, 1usize..6).prop_flat_map(|(d, h, w)| {
            proptest::collection::vec(0.01f32..10.0, d * h * w)
                .prop_map(move |data| Volume::new([d, h, w], data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn post_conditions_and_idempotence(v in volume_strategy()) {
            let i1 = normalize_integral(&v).unwrap();
            prop_assert!((i1.mean() - 1.0).abs() <= 1e-5);
            let i2 = normalize_integral(&i1).unwrap();
            for (a, b) in i1.data().iter().zip(i2.data()) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
            let m1 = normalize_max(&v, 0.03).unwrap();
            prop_assert!((top_fraction_mean(m1.data(), 0.03).unwrap() - 1.0).abs() <= 1e-5);
            let m2 = normalize_max(&m1, 0.03).unwrap();
            for (a, b) in m1.data().iter().zip(m2.data()) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
        }

        #[test]
        fn scale_invariance(v in volume_strategy(), k in prop::sample::select(vec![0.1f32, 1.0, 10.0, 3.7])) {
            let kv = v.scaled(k).unwrap();
            for (a, b) in normalize_integral(&kv).unwrap().data().iter().zip(normalize_integral(&v).unwrap().data()) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
            for (a, b) in normalize_max(&kv, 0.03).unwrap().data().iter().zip(normalize_max(&v, 0.03).unwrap().data()) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
        }
    }
}
