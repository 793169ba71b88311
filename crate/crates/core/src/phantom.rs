//! Synthetic striatal phantoms: two ellipsoidal "striata" with elevated
//! uptake over a uniform background, blurred, posed by a random similarity
//! transform, scaled by a random global intensity factor and corrupted with
//! Gaussian noise.
//!
//! Controls get a high striatum-to-background binding ratio; PD subjects a
//! reduced one, with one side further attenuated. The global intensity
//! factor is what makes intensity normalization matter: without it the raw
//! uptake level would be informative on its own.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::manifest::{write_manifest, write_transforms, ManifestRow, Transforms, MANIFEST_FILE, TRANSFORMS_FILE};
use crate::io::nvol::write_nvol;
use crate::preprocess::{affine_resample, make_similarity, AffineMatrix};
use crate::seed;
use crate::tensor::Volume;
use crate::Label;

/// Axis-aligned ellipsoid in voxel coordinates, `(x, y, z)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).map(|i| ((p[i] - self.center[i]) / self.semi_axes[i]).powi(2)).sum::<f64>() <= 1.0
    }

    fn box_corners(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..8).map(move |m| {
            let mut c = self.center;
            for (i, v) in c.iter_mut().enumerate() {
                *v += if m >> i & 1 == 1 { self.semi_axes[i] } else { -self.semi_axes[i] };
            }
            c
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    /// `(D, H, W)`.
    pub shape: [usize; 3],
    pub background: f32,
    /// Left and right striatum.
    pub striata: [Ellipsoid; 2],
    /// Mean and standard deviation of the control binding ratio.
    pub control_ratio: (f64, f64),
    pub pd_ratio: (f64, f64),
    /// PD side attenuation drawn uniformly from this range.
    pub pd_asymmetry: (f64, f64),
    /// Pose jitter: rotation in degrees and translation in voxels are drawn
    /// uniformly from `[-r, r]` per axis; isotropic scale from the range.
    pub rotation_deg: f64,
    pub translation: f64,
    pub pose_scale: (f64, f64),
    /// Global intensity factor, log-uniform over the range.
    pub intensity_scale: (f64, f64),
    /// Noise standard deviation relative to the background level.
    pub noise_sigma: f64,
    /// Gaussian blur width in voxels.
    pub smoothing_sigma: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self::with_shape([24, 28, 24])
    }
}

impl PhantomParams {
    /// Default phantom with the striata placed proportionally in `shape`.
    pub fn with_shape(shape: [usize; 3]) -> Self {
        let [d, h, w] = shape.map(|v| v as f64);
        let cx = (w - 1.0) / 2.0;
        let side = |sign: f64| Ellipsoid {
            center: [cx + sign * 0.17 * w, 0.55 * (h - 1.0), 0.5 * (d - 1.0)],
            semi_axes: [0.13 * w, 0.2 * h, 0.18 * d],
        };
        PhantomParams {
            shape,
            background: 1.0,
            striata: [side(-1.0), side(1.0)],
            control_ratio: (3.0, 0.3),
            pd_ratio: (1.4, 0.3),
            pd_asymmetry: (0.7, 1.0),
            rotation_deg: 8.0,
            translation: 2.0,
            pose_scale: (0.95, 1.05),
            intensity_scale: (0.5, 2.0),
            noise_sigma: 0.05,
            smoothing_sigma: 0.7,
        }
    }

    /// No pose jitter, noise, blur or global scaling.
    pub fn noiseless(shape: [usize; 3]) -> Self {
        PhantomParams {
            rotation_deg: 0.0,
            translation: 0.0,
            pose_scale: (1.0, 1.0),
            intensity_scale: (1.0, 1.0),
            noise_sigma: 0.0,
            smoothing_sigma: 0.0,
            ..Self::with_shape(shape)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.iter().any(|&v| v < 8) {
            return Err(Error::InvalidShape(format!("phantom shape {:?} too small", self.shape)));
        }
        let ranges = [self.pose_scale, self.intensity_scale, self.pd_asymmetry];
        if ranges.iter().any(|&(a, b)| !(a > 0.0 && b >= a)) {
            return Err(Error::InvalidArgument("scale and asymmetry ranges must be positive and ordered".into()));
        }
        let nonneg = [self.rotation_deg, self.translation, self.noise_sigma, self.smoothing_sigma, self.control_ratio.1, self.pd_ratio.1];
        if nonneg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("jitter, noise and spread parameters must be non-negative".into()));
        }
        if !(self.control_ratio.0 > self.pd_ratio.0) {
            return Err(Error::InvalidArgument("control binding ratio must exceed the PD ratio".into()));
        }
        if !(self.background > 0.0) {
            return Err(Error::InvalidArgument("background must be positive".into()));
        }
        Ok(())
    }

    /// `(x, y, z)` coordinates of the volume centre.
    pub fn center(&self) -> [f64; 3] {
        let [d, h, w] = self.shape;
        [(w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, (d as f64 - 1.0) / 2.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation_deg: [f64; 3],
    pub translation: [f64; 3],
    pub scale: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation_deg: [0.0; 3], translation: [0.0; 3], scale: 1.0 };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Template-to-subject mapping, rotating and scaling about `center`.
    pub fn matrix(&self, center: [f64; 3]) -> Result<AffineMatrix> {
        Ok(make_similarity(self.scale, self.rotation_deg, self.translation)?.about(center))
    }

    fn shrunk(&self, k: f64) -> Pose {
        Pose {
            rotation_deg: self.rotation_deg.map(|v| v * k),
            translation: self.translation.map(|v| v * k),
            scale: 1.0 + (self.scale - 1.0) * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub label: Label,
    /// Drawn striatum-to-background ratio before side attenuation.
    pub binding_ratio: f64,
    /// Attenuation of the affected side (1 for controls).
    pub asymmetry: f64,
    /// 0 = left, 1 = right.
    pub affected_side: usize,
    pub pose: Pose,
    /// True when the drawn pose pushed a striatum out of the field of view
    /// and had to be pulled back toward identity.
    pub pose_clipped: bool,
    pub intensity_scale: f64,
    pub seed: u64,
}

impl SubjectRecord {
    /// Matrix that maps this subject's volume back onto the template.
    pub fn registration(&self, params: &PhantomParams) -> Result<AffineMatrix> {
        self.pose.matrix(params.center())?.inverse()
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(mean, sd).expect("positive sd").sample(rng)
    } else {
        mean
    }
}

fn voxel_point(z: usize, y: usize, x: usize) -> [f64; 3] {
    [x as f64, y as f64, z as f64]
}

/// Voxels inside either striatum of the unposed template.
fn template_mask(params: &PhantomParams) -> Vec<bool> {
    let [d, h, w] = params.shape;
    let mut out = Vec::with_capacity(d * h * w);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let p = voxel_point(z, y, x);
                out.push(params.striata.iter().any(|e| e.contains(p)));
            }
        }
    }
    out
}

/// Striatal mask of a subject: the template ellipsoids moved by `pose` and
/// thresholded at half occupancy after resampling.
pub fn striatal_mask(params: &PhantomParams, pose: &Pose) -> Result<Vec<bool>> {
    let template = template_mask(params);
    if pose.is_identity() {
        return Ok(template);
    }
    let v = Volume::new(params.shape, template.iter().map(|&m| m as u8 as f32).collect())?;
    let moved = affine_resample(&v, &pose.matrix(params.center())?, params.shape)?;
    Ok(moved.data().iter().map(|&x| x >= 0.5).collect())
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter().map(|v| (v / s) as f32).collect()
}

/// Separable Gaussian blur with edge replication.
fn smooth(data: &mut [f32], shape: [usize; 3], sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let [d, h, w] = shape;
    let strides = [h * w, w, 1];
    let extents = [d, h, w];
    let mut line = Vec::new();
    for axis in 0..3 {
        let n = extents[axis];
        let stride = strides[axis];
        let others: Vec<usize> = (0..d * h * w).filter(|&i| (i / stride) % n == 0).collect();
        for start in others {
            line.clear();
            line.extend((0..n).map(|i| data[start + i * stride]));
            for i in 0..n {
                let mut acc = 0.0f32;
                for (j, &kv) in k.iter().enumerate() {
                    let src = (i as isize + j as isize - r).clamp(0, n as isize - 1) as usize;
                    acc += kv * line[src];
                }
                data[start + i * stride] = acc;
            }
        }
    }
}

/// Pose drawn from the jitter ranges, pulled toward identity in halving
/// steps until both striata stay inside the field of view.
fn draw_pose(params: &PhantomParams, rng: &mut impl Rng) -> Result<(Pose, bool)> {
    let r = params.rotation_deg;
    let t = params.translation;
    let pose = Pose {
        rotation_deg: [0; 3].map(|_| uniform(rng, -r, r)),
        translation: [0; 3].map(|_| uniform(rng, -t, t)),
        scale: uniform(rng, params.pose_scale.0, params.pose_scale.1),
    };
    let [d, h, w] = params.shape;
    let limit = [w as f64 - 1.0, h as f64 - 1.0, d as f64 - 1.0];
    let fits = |p: &Pose| -> Result<bool> {
        let m = p.matrix(params.center())?;
        Ok(params
            .striata
            .iter()
            .flat_map(|e| e.box_corners().collect::<Vec<_>>())
            .all(|c| m.apply(c).iter().zip(limit).all(|(&v, l)| v >= 0.0 && v <= l)))
    };
    let mut k = 1.0;
    for _ in 0..8 {
        let p = pose.shrunk(k);
        if fits(&p)? {
            return Ok((p, k < 1.0));
        }
        k *= 0.5;
    }
    Ok((Pose::IDENTITY, true))
}

/// One subject, fully determined by `(params, label, seed)`.
pub fn generate_subject(params: &PhantomParams, label: Label, seed: u64) -> Result<(Volume, SubjectRecord)> {
    params.validate()?;
    let mut rng = seed::rng(seed);
    let (mean, sd) = match label {
        Label::Control => params.control_ratio,
        Label::Pd => params.pd_ratio,
    };
    let ratio = normal(&mut rng, mean, sd).max(1.05);
    let affected_side = rng.gen_range(0..2);
    let asymmetry = match label {
        Label::Control => 1.0,
        Label::Pd => uniform(&mut rng, params.pd_asymmetry.0, params.pd_asymmetry.1),
    };
    let (pose, pose_clipped) = draw_pose(params, &mut rng)?;
    let (lo, hi) = params.intensity_scale;
    let intensity_scale = uniform(&mut rng, lo.ln(), hi.ln()).exp();
    let intensity_scale = if hi > lo { intensity_scale } else { lo };

    let [d, h, w] = params.shape;
    let bg = params.background as f64;
    let mut data = Vec::with_capacity(d * h * w);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let p = voxel_point(z, y, x);
                let mut v = bg;
                for (side, e) in params.striata.iter().enumerate() {
                    if e.contains(p) {
                        let atten = if side == affected_side { asymmetry } else { 1.0 };
                        v = bg * ratio * atten;
                    }
                }
                data.push(v as f32);
            }
        }
    }
    smooth(&mut data, params.shape, params.smoothing_sigma);
    let mut vol = Volume::new(params.shape, data)?;
    if !pose.is_identity() {
        vol = posed_with_background(&vol, &pose, params)?;
    }
    let noise = (params.noise_sigma > 0.0).then(|| Normal::new(0.0, params.noise_sigma * bg).expect("positive sd"));
    for v in vol.data_mut() {
        let mut x = *v as f64;
        if let Some(n) = &noise {
            x += n.sample(&mut rng);
        }
        *v = (x * intensity_scale).max(0.0) as f32;
    }
    crate::tensor::check_finite(vol.data(), "phantom")?;
    let record = SubjectRecord {
        subject_id: String::new(),
        label,
        binding_ratio: ratio,
        asymmetry,
        affected_side,
        pose,
        pose_clipped,
        intensity_scale,
        seed,
    };
    Ok((vol, record))
}

/// Resamples under the pose, filling voxels that map outside the template
/// with the background level instead of zero.
fn posed_with_background(v: &Volume, pose: &Pose, params: &PhantomParams) -> Result<Volume> {
    let bg = params.background;
    let shifted = Volume::new(v.dims(), v.data().iter().map(|x| x - bg).collect())?;
    let moved = affine_resample(&shifted, &pose.matrix(params.center())?, params.shape)?;
    Volume::new(params.shape, moved.data().iter().map(|x| x + bg).collect())
}

/// `n_control` controls followed by `n_pd` PD subjects; subject `i` uses
/// seed `derive(seed, "subject", i)` and id `sub-{i+1:04}`.
pub fn generate_cohort(
    params: &PhantomParams,
    n_control: usize,
    n_pd: usize,
    seed: u64,
) -> Result<Vec<(Volume, SubjectRecord)>> {
    if n_control == 0 || n_pd == 0 {
        return Err(Error::InvalidArgument("both classes need at least one subject".into()));
    }
    let labels = std::iter::repeat_n(Label::Control, n_control).chain(std::iter::repeat_n(Label::Pd, n_pd));
    labels
        .enumerate()
        .map(|(i, label)| {
            let (v, mut rec) = generate_subject(params, label, seed::derive(seed, "subject", i as u64))?;
            rec.subject_id = format!("sub-{:04}", i + 1);
            Ok((v, rec))
        })
        .collect()
}

pub fn manifest_row(rec: &SubjectRecord, path: String) -> ManifestRow {
    ManifestRow {
        path,
        label: rec.label,
        subject_id: rec.subject_id.clone(),
        binding_ratio: Some(rec.binding_ratio),
        scale: Some(rec.intensity_scale),
        rotation_deg: Some(rec.pose.rotation_deg),
        translation: Some(rec.pose.translation),
        pose_scale: Some(rec.pose.scale),
        asymmetry: Some(rec.asymmetry),
        provenance: None,
    }
}

/// Writes `<id>.nvol` per subject plus `manifest.csv` and `transforms.csv`
/// (the ground-truth registration of each subject) into `out`.
pub fn generate_dataset(
    params: &PhantomParams,
    n_control: usize,
    n_pd: usize,
    seed: u64,
    out: &Path,
) -> Result<Vec<SubjectRecord>> {
    let cohort = generate_cohort(params, n_control, n_pd, seed)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(cohort.len());
    let mut transforms = Transforms::new();
    let mut records = Vec::with_capacity(cohort.len());
    for (vol, rec) in cohort {
        let file = format!("{}.nvol", rec.subject_id);
        write_nvol(&out.join(&file), &vol)?;
        rows.push(manifest_row(&rec, file));
        transforms.insert(rec.subject_id.clone(), rec.registration(params)?);
        records.push(rec);
    }
    write_manifest(&out.join(MANIFEST_FILE), &rows)?;
    write_transforms(&out.join(TRANSFORMS_FILE), &transforms)?;
    Ok(records)
}
