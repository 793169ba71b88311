use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::model::Model;
use crate::seed;
use crate::tensor::{check_finite, Volume};

/// Signed gradient of the pre-softmax score of `class` with respect to the
/// input voxels, evaluated in infer mode.
pub fn class_score_gradient(model: &Model, volume: &Volume, class: usize) -> Result<Volume> {
    if class >= model.spec.classes {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range for {} classes",
            model.spec.classes
        )));
    }
    if volume.dims() != model.spec.input_shape {
        return Err(Error::ShapeMismatch(format!(
            "volume {:?} does not match model input {:?}",
            volume.dims(),
            model.spec.input_shape
        )));
    }
    let [d, h, w] = volume.dims();
    let x = volume.tensor().clone().reshape(&[1, d, h, w])?;
    let trace = model.trace(&x, Mode::Infer, &mut seed::rng(0))?;
    let mut onehot = vec![0.0; model.spec.classes];
    onehot[class] = 1.0;
    let (_, grad) = model.backprop(&trace, &onehot, true)?;
    let grad = grad.expect("input gradient was requested");
    Volume::from_tensor(grad)
}

/// Voxelwise magnitude of [`class_score_gradient`].
pub fn saliency_map(model: &Model, volume: &Volume, class: usize) -> Result<Volume> {
    let mut g = class_score_gradient(model, volume, class)?;
    g.data_mut().iter_mut().for_each(|v| *v = v.abs());
    Ok(g)
}

/// Row-major 2D image, `width` columns by `height` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2d {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Image2d {
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.pixels[y * self.width + x]
    }
}

/// Maximum intensity projection along the axial (slice) axis, giving an
/// image with the in-plane `(x, y)` extents.
pub fn saliency_projection(map: &Volume) -> Result<Image2d> {
    let [d, h, w] = map.dims();
    let mut pixels = vec![f32::NEG_INFINITY; h * w];
    for plane in map.data().chunks_exact(h * w).take(d) {
        for (p, &v) in pixels.iter_mut().zip(plane) {
            *p = p.max(v);
        }
    }
    check_finite(&pixels, "projection")?;
    Ok(Image2d { width: w, height: h, pixels })
}
