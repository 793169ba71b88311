//! Architecture descriptors and parameter containers.
//!
//! Two stacks are provided, each in a ReLU and a SELU flavour with identical
//! parameter counts:
//!
//! * `lenet53d`: conv, pool, conv, pool, dense, output.
//! * `alexnet3d`: conv, pool, conv, pool, conv, conv, conv, pool, dense,
//!   dense, output.
//!
//! The output layer is always a linear dense layer with one unit per class;
//! softmax is applied on top of it (and fused with the loss in training).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{
    activate_in_place, activation_grad_in_place, ActivationKind, Conv3d, Dense, DropoutKind,
    DropoutSpec, DropoutTrace, MaxPool3d, Mode, PoolIndices,
};
use crate::layers::out_extent;
use crate::seed;
use crate::tensor::{check_finite, Shape, Tensor};

/// Default network input, `(D, H, W)`.
pub const DEFAULT_INPUT_SHAPE: [usize; 3] = [57, 69, 57];
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchName {
    Lenet53d,
    Alexnet3d,
    /// Free-form stack, exempt from the layer-count rules.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationFamily {
    Relu,
    Selu,
}

impl ActivationFamily {
    pub fn activation(self) -> ActivationKind {
        match self {
            ActivationFamily::Relu => ActivationKind::Relu,
            ActivationFamily::Selu => ActivationKind::Selu,
        }
    }

    pub fn dropout_kind(self) -> DropoutKind {
        match self {
            ActivationFamily::Relu => DropoutKind::Standard,
            ActivationFamily::Selu => DropoutKind::Alpha,
        }
    }

    /// Variance of the zero-mean gaussian used for weight init.
    pub fn init_variance(self, fan_in: usize) -> f64 {
        match self {
            ActivationFamily::Relu => 2.0 / fan_in as f64,
            ActivationFamily::Selu => 1.0 / fan_in as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv { filters: usize, kernel: usize, stride: [usize; 3], padding: [usize; 3] },
    Pool { block: usize },
    Dense { units: usize, dropout: Option<DropoutSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub name: ArchName,
    pub family: ActivationFamily,
    /// `(D, H, W)`, single channel.
    pub input_shape: [usize; 3],
    /// Hidden layers; the output layer is implied.
    pub layers: Vec<LayerSpec>,
    pub classes: usize,
}

impl ArchitectureSpec {
    pub fn lenet53d(family: ActivationFamily) -> Self {
        ArchitectureSpec {
            name: ArchName::Lenet53d,
            family,
            input_shape: DEFAULT_INPUT_SHAPE,
            layers: vec![
                conv(6, 5, 1, 0),
                LayerSpec::Pool { block: 2 },
                conv(16, 5, 1, 0),
                LayerSpec::Pool { block: 2 },
                LayerSpec::Dense { units: 120, dropout: None },
            ],
            classes: NUM_CLASSES,
        }
    }

    /// The first convolution is strided by 2 along every axis.
    pub fn alexnet3d(family: ActivationFamily) -> Self {
        let drop = Some(DropoutSpec { kind: family.dropout_kind(), p: 0.5 });
        ArchitectureSpec {
            name: ArchName::Alexnet3d,
            family,
            input_shape: DEFAULT_INPUT_SHAPE,
            layers: vec![
                conv(16, 5, 2, 0),
                LayerSpec::Pool { block: 2 },
                conv(32, 3, 1, 1),
                LayerSpec::Pool { block: 2 },
                conv(48, 3, 1, 1),
                conv(48, 3, 1, 1),
                conv(32, 3, 1, 1),
                LayerSpec::Pool { block: 2 },
                LayerSpec::Dense { units: 256, dropout: drop },
                LayerSpec::Dense { units: 64, dropout: drop },
            ],
            classes: NUM_CLASSES,
        }
    }

    /// Looks up `lenet53d`, `alexnet3d`, `lenet53d-selu`, `alexnet3d_selu`, ...
    pub fn by_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase().replace('_', "-");
        let (base, family) = match lower.strip_suffix("-selu") {
            Some(b) => (b, ActivationFamily::Selu),
            None => (lower.strip_suffix("-relu").unwrap_or(&lower), ActivationFamily::Relu),
        };
        match base {
            "lenet53d" => Ok(Self::lenet53d(family)),
            "alexnet3d" => Ok(Self::alexnet3d(family)),
            _ => Err(Error::Parse(format!("unknown model '{name}'"))),
        }
    }

    pub fn label(&self) -> String {
        let base = match self.name {
            ArchName::Lenet53d => "lenet53d",
            ArchName::Alexnet3d => "alexnet3d",
            ArchName::Custom => "custom",
        };
        match self.family {
            ActivationFamily::Relu => base.to_string(),
            ActivationFamily::Selu => format!("{base}-selu"),
        }
    }

    pub fn with_input_shape(mut self, shape: [usize; 3]) -> Self {
        self.input_shape = shape;
        self
    }

    /// Multiplies every filter count and hidden width by `factor`
    /// (rounded, at least 1).
    pub fn with_width_scale(mut self, factor: f64) -> Self {
        let scale = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        for l in &mut self.layers {
            match l {
                LayerSpec::Conv { filters, .. } => *filters = scale(*filters),
                LayerSpec::Dense { units, .. } => *units = scale(*units),
                LayerSpec::Pool { .. } => {}
            }
        }
        self
    }

    /// Activation shape after every hidden layer, starting from the input
    /// `(1, D, H, W)`. Dense layers report `(units, 1, 1, 1)`.
    pub fn propagate(&self) -> Result<Vec<[usize; 4]>> {
        if self.classes < 2 {
            return Err(Error::InvalidArgument("at least two classes are required".into()));
        }
        if self.input_shape.contains(&0) {
            return Err(Error::InvalidShape(format!("input shape {:?}", self.input_shape)));
        }
        let counts = |pred: fn(&LayerSpec) -> bool| self.layers.iter().filter(|l| pred(l)).count();
        let n_conv = counts(|l| matches!(l, LayerSpec::Conv { .. }));
        let n_pool = counts(|l| matches!(l, LayerSpec::Pool { .. }));
        let n_dense = counts(|l| matches!(l, LayerSpec::Dense { .. }));
        let expected = match self.name {
            ArchName::Lenet53d => Some((2, 2, 1)),
            ArchName::Alexnet3d => Some((5, 3, 2)),
            ArchName::Custom => None,
        };
        if let Some(e) = expected {
            if (n_conv, n_pool, n_dense) != e {
                return Err(Error::InvalidArgument(format!(
                    "{} needs {}/{}/{} conv/pool/dense layers, got {n_conv}/{n_pool}/{n_dense}",
                    self.label(),
                    e.0,
                    e.1,
                    e.2
                )));
            }
        }
        let [d, h, w] = self.input_shape;
        let mut cur = [1, d, h, w];
        let mut flat = false;
        let mut shapes = vec![cur];
        for (i, l) in self.layers.iter().enumerate() {
            cur = match *l {
                LayerSpec::Conv { filters, kernel, stride, padding } => {
                    if flat {
                        return Err(Error::InvalidArgument(format!("layer {i}: conv after dense")));
                    }
                    if filters == 0 || kernel == 0 || stride.contains(&0) {
                        return Err(Error::InvalidArgument(format!("layer {i}: degenerate conv")));
                    }
                    let mut next = [filters, 0, 0, 0];
                    for a in 0..3 {
                        next[a + 1] = out_extent(cur[a + 1], kernel, stride[a], padding[a]).ok_or_else(|| {
                            Error::InvalidShape(format!(
                                "layer {i}: kernel {kernel} does not fit extent {} with pad {}",
                                cur[a + 1],
                                padding[a]
                            ))
                        })?;
                    }
                    next
                }
                LayerSpec::Pool { block } => {
                    if flat {
                        return Err(Error::InvalidArgument(format!("layer {i}: pool after dense")));
                    }
                    MaxPool3d::new(block)?
                        .output_dims(&cur)
                        .map_err(|e| Error::InvalidShape(format!("layer {i}: {e}")))?
                }
                LayerSpec::Dense { units, dropout } => {
                    if units == 0 {
                        return Err(Error::InvalidArgument(format!("layer {i}: dense with zero units")));
                    }
                    if let Some(d) = dropout {
                        d.validate()?;
                    }
                    flat = true;
                    [units, 1, 1, 1]
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.propagate().map(|_| ())
    }
}

fn conv(filters: usize, kernel: usize, stride: usize, pad: usize) -> LayerSpec {
    LayerSpec::Conv { filters, kernel, stride: [stride; 3], padding: [pad; 3] }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(Conv3d),
    Pool(MaxPool3d),
    Dense { layer: Dense, dropout: Option<DropoutSpec> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ArchitectureSpec,
    /// Hidden layers followed by the linear output layer.
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug)]
pub(crate) enum Step {
    Conv { input: Tensor, z: Tensor },
    Pool { indices: PoolIndices },
    Dense { input: Vec<f32>, z: Vec<f32>, dropout: Option<DropoutTrace> },
}

#[derive(Debug)]
pub(crate) struct Trace {
    pub steps: Vec<Step>,
    pub logits: Vec<f32>,
}

/// Parameter gradients, one buffer per block in [`Model::param_blocks`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f32>>);

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Gradients(model.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect())
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

pub fn build_model(spec: &ArchitectureSpec, seed: u64) -> Result<Model> {
    Model::build(spec.clone(), seed)
}

impl Model {
    pub fn build(spec: ArchitectureSpec, seed: u64) -> Result<Self> {
        let shapes = spec.propagate()?;
        let act = spec.family.activation();
        let mut rng = seed::derived_rng(seed, "init", 0);
        let mut layers = Vec::with_capacity(spec.layers.len() + 1);
        for (i, l) in spec.layers.iter().enumerate() {
            let inp = shapes[i];
            layers.push(match *l {
                LayerSpec::Conv { filters, kernel, stride, padding } => {
                    let fan_in = inp[0] * kernel.pow(3);
                    let w = init_weights(&mut rng, spec.family, fan_in, filters * fan_in);
                    Layer::Conv(Conv3d::new(
                        Tensor::from_vec(&[filters, inp[0], kernel, kernel, kernel], w)?,
                        vec![0.0; filters],
                        stride,
                        padding,
                        act,
                    )?)
                }
                LayerSpec::Pool { block } => Layer::Pool(MaxPool3d::new(block)?),
                LayerSpec::Dense { units, dropout } => {
                    let fan_in: usize = inp.iter().product();
                    let w = init_weights(&mut rng, spec.family, fan_in, units * fan_in);
                    Layer::Dense {
                        layer: Dense::new(Tensor::from_vec(&[units, fan_in], w)?, vec![0.0; units], act)?,
                        dropout,
                    }
                }
            });
        }
        let last: usize = shapes.last().expect("input shape is always present").iter().product();
        let w = init_weights(&mut rng, spec.family, last, spec.classes * last);
        layers.push(Layer::Dense {
            layer: Dense::new(
                Tensor::from_vec(&[spec.classes, last], w)?,
                vec![0.0; spec.classes],
                ActivationKind::Linear,
            )?,
            dropout: None,
        });
        Ok(Model { spec, layers, seed })
    }

    /// Weight and bias buffers of every parametrised layer, in order.
    pub fn param_blocks(&self) -> Vec<&[f32]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv(c) => {
                    out.push(c.weights.data());
                    out.push(&c.bias[..]);
                }
                Layer::Dense { layer, .. } => {
                    out.push(layer.weights.data());
                    out.push(&layer.bias[..]);
                }
                Layer::Pool(_) => {}
            }
        }
        out
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv(c) => {
                    out.push(c.weights.data_mut());
                    out.push(&mut c.bias[..]);
                }
                Layer::Dense { layer, .. } => {
                    out.push(layer.weights.data_mut());
                    out.push(&mut layer.bias[..]);
                }
                Layer::Pool(_) => {}
            }
        }
        out
    }

    /// Declared shape of every block in [`Model::param_blocks`] order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.weights.dims().to_vec());
                    out.push(vec![c.bias.len()]);
                }
                Layer::Dense { layer, .. } => {
                    out.push(layer.weights.dims().to_vec());
                    out.push(vec![layer.bias.len()]);
                }
                Layer::Pool(_) => {}
            }
        }
        out
    }

    pub fn count_params(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len()).sum()
    }

    fn check_sample(&self, x: &Tensor) -> Result<()> {
        let [d, h, w] = self.spec.input_shape;
        if x.dims() != [1, d, h, w] {
            return Err(Error::ShapeMismatch(format!(
                "model expects (1,{d},{h},{w}) samples, got {}",
                x.shape()
            )));
        }
        Ok(())
    }

    /// Forward pass for one `(1, D, H, W)` sample, recording what backprop
    /// needs. `rng` drives dropout in train mode.
    pub(crate) fn trace(&self, x: &Tensor, mode: Mode, rng: &mut impl Rng) -> Result<Trace> {
        self.check_sample(x)?;
        let mut steps = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    let z = c.forward_linear(&cur)?;
                    let mut a = z.data().to_vec();
                    activate_in_place(c.activation, &mut a);
                    let next = Tensor::from_parts(z.shape().clone(), a);
                    steps.push(Step::Conv { input: std::mem::replace(&mut cur, next), z });
                }
                Layer::Pool(p) => {
                    let (out, indices) = p.forward(&cur)?;
                    cur = out;
                    steps.push(Step::Pool { indices });
                }
                Layer::Dense { layer, dropout } => {
                    let input = cur.data().to_vec();
                    let z = layer.linear(&input)?;
                    let mut a = z.clone();
                    activate_in_place(layer.activation, &mut a);
                    let trace = match (dropout, mode) {
                        (Some(d), Mode::Train) if d.p > 0.0 => Some(d.apply_in_place(&mut a, rng)),
                        _ => None,
                    };
                    let n = a.len();
                    cur = Tensor::from_parts(Shape::new(&[n])?, a);
                    steps.push(Step::Dense { input, z, dropout: trace });
                }
            }
        }
        let logits = cur.into_data();
        check_finite(&logits, "logits")?;
        Ok(Trace { steps, logits })
    }

    /// Backprop from `dL/dlogits`. Returns parameter gradients and, when
    /// requested, the gradient with respect to the input sample.
    pub(crate) fn backprop(
        &self,
        trace: &Trace,
        grad_logits: &[f32],
        need_input: bool,
    ) -> Result<(Gradients, Option<Tensor>)> {
        let mut blocks: Vec<Vec<f32>> = Vec::new();
        let mut grad = grad_logits.to_vec();
        let mut grad_shape: Option<Shape> = None;
        let n_layers = self.layers.len();
        for (idx, (layer, step)) in self.layers.iter().zip(&trace.steps).enumerate().rev() {
            let first = idx == 0;
            match (layer, step) {
                (Layer::Dense { layer, .. }, Step::Dense { input, z, dropout }) => {
                    if let Some(t) = dropout {
                        t.backward_in_place(&mut grad);
                    }
                    activation_grad_in_place(layer.activation, z, &mut grad)?;
                    let g = layer.backward_linear(input, &grad)?;
                    blocks.push(g.bias);
                    blocks.push(g.weights.into_data());
                    grad = g.input;
                    grad_shape = None;
                }
                (Layer::Conv(c), Step::Conv { input, z }) => {
                    if grad.len() != z.len() {
                        return Err(Error::ShapeMismatch("conv gradient length".into()));
                    }
                    activation_grad_in_place(c.activation, z.data(), &mut grad)?;
                    let gz = Tensor::from_parts(z.shape().clone(), std::mem::take(&mut grad));
                    let g = c.backward_impl(input, &gz, need_input || !first)?;
                    blocks.push(g.bias);
                    blocks.push(g.weights.into_data());
                    grad_shape = Some(g.input.shape().clone());
                    grad = g.input.into_data();
                }
                (Layer::Pool(_), Step::Pool { indices }) => {
                    let shape = indices.output_shape().clone();
                    let g = crate::layers::maxpool3d_backward(indices, &Tensor::from_parts(shape, grad))?;
                    grad_shape = Some(g.shape().clone());
                    grad = g.into_data();
                }
                _ => return Err(Error::ShapeMismatch(format!("trace step {idx} of {n_layers} is stale"))),
            }
        }
        blocks.reverse();
        let input_grad = if need_input {
            check_finite(&grad, "input gradient")?;
            let shape = grad_shape.unwrap_or(Shape::new(&[grad.len()])?);
            Some(Tensor::from_parts(shape, grad).reshape(&{
                let [d, h, w] = self.spec.input_shape;
                [1, d, h, w]
            })?)
        } else {
            None
        };
        Ok((Gradients(blocks), input_grad))
    }

    /// Pre-softmax scores for one `(1, D, H, W)` sample in infer mode.
    pub fn logits(&self, x: &Tensor) -> Result<Vec<f32>> {
        // infer mode never draws from the rng
        Ok(self.trace(x, Mode::Infer, &mut seed::rng(0))?.logits)
    }

    /// Class probabilities for one `(1, D, H, W)` sample.
    pub fn predict_proba(&self, x: &Tensor, mode: Mode, rng_seed: u64) -> Result<Vec<f32>> {
        let mut logits = self.trace(x, mode, &mut seed::rng(rng_seed))?.logits;
        activate_in_place(ActivationKind::Softmax, &mut logits);
        Ok(logits)
    }

    /// Batched forward over `(N, 1, D, H, W)`, returning `(N, classes)`
    /// probabilities. Sample `i` draws dropout masks from
    /// `derive(seed, "dropout", i)`.
    pub fn forward(&self, batch: &Tensor, mode: Mode, seed: u64) -> Result<Tensor> {
        let dims = batch.dims();
        if dims.len() != 5 {
            return Err(Error::ShapeMismatch(format!("batch must be (N,1,D,H,W), got {}", batch.shape())));
        }
        let sample_dims = &dims[1..];
        let mut out = Vec::with_capacity(dims[0] * self.spec.classes);
        for i in 0..dims[0] {
            let x = Tensor::from_parts(Shape::new(sample_dims)?, batch.outer(i).to_vec());
            out.extend(self.predict_proba(&x, mode, seed::derive(seed, "dropout", i as u64))?);
        }
        Tensor::from_vec(&[dims[0], self.spec.classes], out)
    }
}

pub fn forward(model: &Model, batch: &Tensor, mode: Mode, seed: u64) -> Result<Tensor> {
    model.forward(batch, mode, seed)
}

pub fn count_params(model: &Model) -> usize {
    model.count_params()
}

fn init_weights(rng: &mut impl Rng, family: ActivationFamily, fan_in: usize, n: usize) -> Vec<f32> {
    let normal = Normal::new(0.0, family.init_variance(fan_in).sqrt()).expect("finite positive std");
    (0..n).map(|_| normal.sample(rng) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lenet_default_parameter_count() {
        let m = Model::build(ArchitectureSpec::lenet53d(ActivationFamily::Relu), 1).unwrap();
        // conv1 6*(1*125+1)=756; 57,69,57 -> 53,65,53 -> pool 26,32,26
        // conv2 16*(6*125+1)=12016; -> 22,28,22 -> pool 11,14,11 = 1694 voxels
        // dense 120*(16*1694+1)=3_252_600; out 2*(120+1)=242
        assert_eq!(m.count_params(), 756 + 12_016 + 3_252_600 + 242);
    }

    #[test]
    fn alexnet_default_parameter_count() {
        let m = Model::build(ArchitectureSpec::alexnet3d(ActivationFamily::Relu), 1).unwrap();
        // conv1 16*(125+1)=2016; s2: 27,33,27 -> pool 13,16,13
        // conv2 32*(16*27+1)=13856 -> pool 6,8,6
        // conv3 48*(32*27+1)=41520; conv4 48*(48*27+1)=62256; conv5 32*(48*27+1)=41504 -> pool 3,4,3
        // dense 256*(32*36+1)=295168; dense 64*257=16448; out 2*65=130
        let expect = 2016 + 13_856 + 41_520 + 62_256 + 41_504 + 295_168 + 16_448 + 130;
        assert_eq!(m.count_params(), expect);
    }

    #[test]
    fn selu_and_relu_counts_agree() {
        for shape in [DEFAULT_INPUT_SHAPE, [24, 28, 24]] {
            for f in [ArchitectureSpec::lenet53d, ArchitectureSpec::alexnet3d] {
                let r = Model::build(f(ActivationFamily::Relu).with_input_shape(shape), 0).unwrap();
                let s = Model::build(f(ActivationFamily::Selu).with_input_shape(shape), 0).unwrap();
                assert_eq!(r.count_params(), s.count_params());
            }
        }
    }

    #[test]
    fn single_layer_counts() {
        let dense = ArchitectureSpec {
            name: ArchName::Custom,
            family: ActivationFamily::Relu,
            input_shape: [1, 1, 3],
            layers: vec![],
            classes: 2,
        };
        assert_eq!(Model::build(dense, 0).unwrap().count_params(), 8);
        let c = Conv3d::new(Tensor::zeros(&[4, 1, 3, 3, 3]).unwrap(), vec![0.0; 4], [1; 3], [0; 3], ActivationKind::Relu)
            .unwrap();
        assert_eq!(c.weights.len() + c.bias.len(), 112);
    }

    #[test]
    fn equal_seeds_give_identical_parameters() {
        let spec = ArchitectureSpec::lenet53d(ActivationFamily::Selu).with_input_shape([16, 20, 16]);
        assert_eq!(Model::build(spec.clone(), 9).unwrap(), Model::build(spec.clone(), 9).unwrap());
        assert_ne!(Model::build(spec.clone(), 9).unwrap(), Model::build(spec, 10).unwrap());
    }

    #[test]
    fn oversized_pool_is_rejected() {
        let spec = ArchitectureSpec {
            name: ArchName::Custom,
            family: ActivationFamily::Relu,
            input_shape: [4, 4, 4],
            layers: vec![conv(2, 3, 1, 0), LayerSpec::Pool { block: 3 }],
            classes: 2,
        };
        assert!(Model::build(spec, 0).is_err());
        let mut lenet = ArchitectureSpec::lenet53d(ActivationFamily::Relu);
        lenet.layers.pop();
        assert!(lenet.validate().is_err());
    }

    #[test]
    fn by_name_parses_families() {
        assert_eq!(ArchitectureSpec::by_name("alexnet3d_selu").unwrap().family, ActivationFamily::Selu);
        assert_eq!(ArchitectureSpec::by_name("LENET53D").unwrap().name, ArchName::Lenet53d);
        assert!(ArchitectureSpec::by_name("vgg").is_err());
        let half = ArchitectureSpec::alexnet3d(ActivationFamily::Relu).with_width_scale(0.5);
        assert!(matches!(half.layers[0], LayerSpec::Conv { filters: 8, .. }));
        assert!(matches!(half.layers[9], LayerSpec::Dense { units: 32, .. }));
    }

    #[test]
    fn reduced_shapes_propagate() {
        for f in [ArchitectureSpec::lenet53d, ArchitectureSpec::alexnet3d] {
            let spec = f(ActivationFamily::Relu).with_input_shape([24, 28, 24]);
            let shapes = spec.propagate().unwrap();
            assert!(shapes.iter().all(|s| s.iter().all(|&e| e >= 1)));
        }
    }
}
