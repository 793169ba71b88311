use super::activation::{activate_in_place, activation_grad_in_place};
use super::{out_extent, valid_range, ActivationKind};
use crate::error::{Error, Result};
use crate::tensor::{check_finite, Shape, Tensor};

/// 3D convolution over `(C, D, H, W)` inputs with `K` cubic filters.
///
/// The kernel is applied in its flipped (true convolution) orientation:
///
/// ```text
/// out[k, z, y, x] = b[k] + sum_c sum_{u,v,w} W[k, c, P-1-u, P-1-v, P-1-w]
///                                            * in[c, z*s+u-pad, y*s+v-pad, x*s+w-pad]
/// ```
///
/// Positions outside the input read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3d {
    /// `(K, C, P, P, P)`.
    pub weights: Tensor,
    pub bias: Vec<f32>,
    /// Per spatial axis, `(D, H, W)` order.
    pub stride: [usize; 3],
    pub padding: [usize; 3],
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Vec<f32>,
}

impl Conv3d {
    pub fn new(
        weights: Tensor,
        bias: Vec<f32>,
        stride: [usize; 3],
        padding: [usize; 3],
        activation: ActivationKind,
    ) -> Result<Self> {
        let d = weights.dims();
        if d.len() != 5 {
            return Err(Error::InvalidShape(format!(
                "conv weights must be (K,C,P,Q,R), got {}",
                weights.shape()
            )));
        }
        if d[2] != d[3] || d[3] != d[4] {
            return Err(Error::InvalidShape(format!("kernel {}x{}x{} is not cubic", d[2], d[3], d[4])));
        }
        if bias.len() != d[0] {
            return Err(Error::ShapeMismatch(format!("{} biases for {} filters", bias.len(), d[0])));
        }
        if stride.contains(&0) {
            return Err(Error::InvalidArgument("stride must be positive".into()));
        }
        if activation == ActivationKind::Softmax {
            return Err(Error::InvalidArgument("softmax is only valid on the output layer".into()));
        }
        Ok(Conv3d { weights, bias, stride, padding, activation })
    }

    pub fn filters(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dims()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weights.dims()[2]
    }

    /// `(K, D', H', W')` for an input of shape `(C, D, H, W)`.
    pub fn output_dims(&self, input: &[usize]) -> Result<[usize; 4]> {
        if input.len() != 4 {
            return Err(Error::ShapeMismatch(format!("conv input must be (C,D,H,W), got {input:?}")));
        }
        if input[0] != self.in_channels() {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} channels, got {}",
                self.in_channels(),
                input[0]
            )));
        }
        let mut out = [self.filters(), 0, 0, 0];
        for a in 0..3 {
            out[a + 1] = out_extent(input[a + 1], self.kernel(), self.stride[a], self.padding[a])
                .ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "kernel {} larger than padded input extent {} (pad {})",
                        self.kernel(),
                        input[a + 1],
                        self.padding[a]
                    ))
                })?;
        }
        Ok(out)
    }

    /// Pre-activation output.
    pub fn forward_linear(&self, input: &Tensor) -> Result<Tensor> {
        let out_dims = self.output_dims(input.dims())?;
        let geo = Geometry::new(self, input.dims(), &out_dims);
        let rows = geo.rows();
        let wf = flip_blocks(self.weights.data(), geo.kvol);
        let mut out = vec![0.0f32; out_dims.iter().product()];
        for (k, out_k) in out.chunks_exact_mut(geo.out_vol).enumerate() {
            out_k.fill(self.bias[k]);
        }
        let mut cols = Vec::new();
        for (z0, z1) in geo.slabs() {
            geo.im2col(input.data(), z0, z1, &mut cols);
            let n = (z1 - z0) * geo.plane;
            for k in 0..geo.k {
                let start = k * geo.out_vol + z0 * geo.plane;
                let dst = &mut out[start..start + n];
                for (r, col) in cols.chunks_exact(n).enumerate() {
                    axpy(wf[k * rows + r], col, dst);
                }
            }
        }
        Ok(Tensor::from_parts(Shape::new(&out_dims)?, out))
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut z = self.forward_linear(input)?.into_data();
        activate_in_place(self.activation, &mut z);
        check_finite(&z, "conv3d output")?;
        let dims = self.output_dims(input.dims())?;
        Tensor::from_vec(&dims, z)
    }

    /// Gradients of the pre-activation map given `dL/dz`.
    pub fn backward_linear(&self, input: &Tensor, grad_z: &Tensor) -> Result<ConvGrads> {
        self.backward_impl(input, grad_z, true)
    }

    /// As [`Conv3d::backward_linear`]; with `need_input == false` the input
    /// gradient is left as zeros and not computed.
    pub(crate) fn backward_impl(&self, input: &Tensor, grad_z: &Tensor, need_input: bool) -> Result<ConvGrads> {
        let out_dims = self.output_dims(input.dims())?;
        if grad_z.dims() != out_dims {
            return Err(Error::ShapeMismatch(format!(
                "conv gradient {} does not match output {:?}",
                grad_z.shape(),
                out_dims
            )));
        }
        let geo = Geometry::new(self, input.dims(), &out_dims);
        let rows = geo.rows();
        let wf = flip_blocks(self.weights.data(), geo.kvol);
        let g = grad_z.data();
        let mut gx = vec![0.0f32; input.len()];
        let mut gwf = vec![0.0f32; wf.len()];
        let gb: Vec<f32> =
            g.chunks_exact(geo.out_vol).map(|gk| gk.iter().map(|&v| v as f64).sum::<f64>() as f32).collect();
        let mut cols = Vec::new();
        let mut gcols = Vec::new();
        for (z0, z1) in geo.slabs() {
            geo.im2col(input.data(), z0, z1, &mut cols);
            let n = (z1 - z0) * geo.plane;
            if need_input {
                gcols.clear();
                gcols.resize(rows * n, 0.0);
            }
            for k in 0..geo.k {
                let start = k * geo.out_vol + z0 * geo.plane;
                let gk = &g[start..start + n];
                for (r, col) in cols.chunks_exact(n).enumerate() {
                    gwf[k * rows + r] += dot(gk, col);
                }
                if need_input {
                    for (r, gcol) in gcols.chunks_exact_mut(n).enumerate() {
                        axpy(wf[k * rows + r], gk, gcol);
                    }
                }
            }
            if need_input {
                geo.col2im(&gcols, z0, z1, &mut gx);
            }
        }
        let gw = flip_blocks(&gwf, geo.kvol);
        check_finite(&gx, "conv3d input gradient")?;
        check_finite(&gw, "conv3d weight gradient")?;
        Ok(ConvGrads {
            input: Tensor::from_parts(input.shape().clone(), gx),
            weights: Tensor::from_parts(self.weights.shape().clone(), gw),
            bias: gb,
        })
    }

    /// Gradients of the full map (convolution followed by activation).
    pub fn backward(&self, input: &Tensor, grad_out: &Tensor) -> Result<ConvGrads> {
        let mut grad = grad_out.data().to_vec();
        if self.activation != ActivationKind::Linear {
            let z = self.forward_linear(input)?;
            if z.shape() != grad_out.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "conv gradient {} does not match output {}",
                    grad_out.shape(),
                    z.shape()
                )));
            }
            activation_grad_in_place(self.activation, z.data(), &mut grad)?;
        }
        self.backward_linear(input, &Tensor::from_parts(grad_out.shape().clone(), grad))
    }
}

pub fn conv3d_forward(layer: &Conv3d, input: &Tensor) -> Result<Tensor> {
    layer.forward(input)
}

pub fn conv3d_backward(layer: &Conv3d, input: &Tensor, grad_out: &Tensor) -> Result<ConvGrads> {
    layer.backward(input, grad_out)
}

/// Reverses every `kvol` block, turning stored kernels into the orientation
/// that multiplies unflipped input patches (and back).
fn flip_blocks(w: &[f32], kvol: usize) -> Vec<f32> {
    w.chunks_exact(kvol).flat_map(|b| b.iter().rev().copied()).collect()
}

#[inline]
fn axpy(a: f32, x: &[f32], y: &mut [f32]) {
    for (d, &s) in y.iter_mut().zip(x) {
        *d += a * s;
    }
}

/// Dot product over eight interleaved partial sums, which lets the compiler
/// vectorize the loop.
#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f32>() + tail
}

/// Patch matrices above this many entries are built in slabs of output
/// depth planes.
const COL_BUDGET: usize = 1 << 22;

/// Extents of one convolution and the patch (im2col) mapping between input
/// voxels and `(C * P^3, positions)` matrices. Row `((c*P + u)*P + v)*P + w`
/// holds input channel `c` at offset `(u, v, w)` from each window origin.
struct Geometry {
    k: usize,
    c: usize,
    p: usize,
    kvol: usize,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    in_vol: usize,
    out_vol: usize,
    plane: usize,
    stride: [usize; 3],
    pad: [usize; 3],
}

impl Geometry {
    fn new(layer: &Conv3d, input: &[usize], out: &[usize; 4]) -> Self {
        let p = layer.kernel();
        Geometry {
            k: layer.filters(),
            c: layer.in_channels(),
            p,
            kvol: p * p * p,
            in_dims: [input[1], input[2], input[3]],
            out_dims: [out[1], out[2], out[3]],
            in_vol: input[1] * input[2] * input[3],
            out_vol: out[1] * out[2] * out[3],
            plane: out[2] * out[3],
            stride: layer.stride,
            pad: layer.padding,
        }
    }

    fn rows(&self) -> usize {
        self.c * self.kvol
    }

    fn slabs(&self) -> impl Iterator<Item = (usize, usize)> {
        let od = self.out_dims[0];
        let per = (COL_BUDGET / (self.rows() * self.plane).max(1)).clamp(1, od);
        (0..od).step_by(per).map(move |z0| (z0, (z0 + per).min(od)))
    }

    /// Calls `f(row, out_offset, in_offset, n)` for every in-bounds row
    /// segment of output planes `z0..z1`; `out_offset` is relative to the
    /// slab, `in_offset` indexes the full input, and consecutive outputs
    /// step `stride[2]` input voxels apart.
    #[inline]
    fn segments(&self, z0: usize, z1: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
        let [_, oh, ow] = self.out_dims;
        let [id, ih, iw] = self.in_dims;
        let [sd, sh, sw] = self.stride;
        let [pd, ph, pw] = self.pad;
        let p = self.p;
        for c in 0..self.c {
            for u in 0..p {
                let (zl, zh) = valid_range(self.out_dims[0], id, sd, pd, u);
                for v in 0..p {
                    let (y0, y1) = valid_range(oh, ih, sh, ph, v);
                    for q in 0..p {
                        let (x0, x1) = valid_range(ow, iw, sw, pw, q);
                        if x0 >= x1 {
                            continue;
                        }
                        let row = ((c * p + u) * p + v) * p + q;
                        let ix0 = x0 * sw + q - pw;
                        for oz in zl.max(z0)..zh.min(z1) {
                            let iz = oz * sd + u - pd;
                            for oy in y0..y1 {
                                let iy = oy * sh + v - ph;
                                f(row, ((oz - z0) * oh + oy) * ow + x0, c * self.in_vol + (iz * ih + iy) * iw + ix0, x1 - x0);
                            }
                        }
                    }
                }
            }
        }
    }

    fn im2col(&self, x: &[f32], z0: usize, z1: usize, cols: &mut Vec<f32>) {
        let n = (z1 - z0) * self.plane;
        cols.clear();
        cols.resize(self.rows() * n, 0.0);
        let sw = self.stride[2];
        self.segments(z0, z1, |row, o, i, len| {
            let dst = &mut cols[row * n + o..row * n + o + len];
            if sw == 1 {
                dst.copy_from_slice(&x[i..i + len]);
            } else {
                for (j, d) in dst.iter_mut().enumerate() {
                    *d = x[i + j * sw];
                }
            }
        });
    }

    /// Adjoint of [`Geometry::im2col`]: scatters patch gradients back onto
    /// the input, summing overlaps.
    fn col2im(&self, cols: &[f32], z0: usize, z1: usize, gx: &mut [f32]) {
        let n = (z1 - z0) * self.plane;
        let sw = self.stride[2];
        self.segments(z0, z1, |row, o, i, len| {
            let src = &cols[row * n + o..row * n + o + len];
            if sw == 1 {
                axpy(1.0, src, &mut gx[i..i + len]);
            } else {
                for (j, &s) in src.iter().enumerate() {
                    gx[i + j * sw] += s;
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> Tensor {
        let n = dims.iter().product();
        Tensor::from_vec(dims, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Direct transcription of the flipped-kernel sum with explicit bounds
    /// checks, independent of the patch-matrix implementation.
    fn naive(layer: &Conv3d, x: &Tensor) -> Vec<f32> {
        let [c, d, h, w] = [x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3]];
        let k = layer.filters();
        let p = layer.kernel();
        let s = layer.stride;
        let pad = layer.padding;
        let od = (d + 2 * pad[0] - p) / s[0] + 1;
        let oh = (h + 2 * pad[1] - p) / s[1] + 1;
        let ow = (w + 2 * pad[2] - p) / s[2] + 1;
        let wt = |kk: usize, cc: usize, a: usize, b: usize, e: usize| {
            layer.weights.data()[(((kk * c + cc) * p + a) * p + b) * p + e]
        };
        let inp = |cc: usize, z: isize, y: isize, xx: isize| -> f64 {
            if z < 0 || y < 0 || xx < 0 || z >= d as isize || y >= h as isize || xx >= w as isize {
                0.0
            } else {
                x.data()[((cc * d + z as usize) * h + y as usize) * w + xx as usize] as f64
            }
        };
        let mut out = Vec::new();
        for kk in 0..k {
            for oz in 0..od {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = layer.bias[kk] as f64;
                        for cc in 0..c {
                            for u in 0..p {
                                for v in 0..p {
                                    for q in 0..p {
                                        let z = (oz * s[0] + u) as isize - pad[0] as isize;
                                        let y = (oy * s[1] + v) as isize - pad[1] as isize;
                                        let xx = (ox * s[2] + q) as isize - pad[2] as isize;
                                        acc += wt(kk, cc, p - 1 - u, p - 1 - v, p - 1 - q) as f64
                                            * inp(cc, z, y, xx);
                                    }
                                }
                            }
                        }
                        out.push(acc as f32);
                    }
                }
            }
        }
        out
    }

    fn layer(w: Tensor, bias: Vec<f32>, s: usize, p: usize) -> Conv3d {
        Conv3d::new(w, bias, [s; 3], [p; 3], ActivationKind::Linear).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, &[1, 3, 4, 5]);
        let l = layer(Tensor::full(&[1, 1, 1, 1, 1], 1.0).unwrap(), vec![0.0], 1, 0);
        assert_eq!(l.forward(&x).unwrap(), x);
        let g = l.backward(&x, &x).unwrap();
        assert_eq!(g.input, x);
    }

    #[test]
    fn bias_only() {
        let x = Tensor::full(&[1, 4, 4, 4], 9.0).unwrap();
        let l = layer(Tensor::zeros(&[1, 1, 3, 3, 3]).unwrap(), vec![2.5], 1, 0);
        let y = l.forward(&x).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2, 2]);
        assert!(y.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&mut rng, &[1, 4, 4, 4]);
        let w = random_tensor(&mut rng, &[1, 1, 3, 3, 3]);
        let l = layer(w, vec![0.1], 1, 0);
        let y = l.forward(&x).unwrap();
        for (a, b) in y.data().iter().zip(naive(&l, &x)) {
            assert!((a - b).abs() <= 1e-5);
        }
    }

    #[test]
    fn kernel_is_flipped() {
        // A kernel with a single non-zero tap at the last position shifts the
        // input by zero under true convolution with this index convention.
        let mut w = vec![0.0; 8];
        w[7] = 1.0;
        let l = layer(Tensor::from_vec(&[1, 1, 2, 2, 2], w).unwrap(), vec![0.0], 1, 0);
        let x = Tensor::from_vec(&[1, 2, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        assert_eq!(l.forward(&x).unwrap().data(), &[0.0]);
    }

    #[test]
    fn zero_grad_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, &[2, 5, 4, 3]);
        let w = random_tensor(&mut rng, &[3, 2, 3, 3, 3]);
        let l = Conv3d::new(w, vec![0.0; 3], [1, 1, 1], [1, 1, 1], ActivationKind::Relu).unwrap();
        let y = l.forward(&x).unwrap();
        let g = l.backward(&x, &Tensor::zeros(y.dims()).unwrap()).unwrap();
        assert!(g.input.data().iter().chain(g.weights.data()).chain(&g.bias).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let l = layer(Tensor::zeros(&[1, 2, 3, 3, 3]).unwrap(), vec![0.0], 1, 0);
        assert!(matches!(l.forward(&Tensor::zeros(&[1, 4, 4, 4]).unwrap()), Err(Error::ShapeMismatch(_))));
        assert!(matches!(l.forward(&Tensor::zeros(&[2, 2, 4, 4]).unwrap()), Err(Error::ShapeMismatch(_))));
        assert!(Conv3d::new(Tensor::zeros(&[1, 1, 3, 2, 3]).unwrap(), vec![0.0], [1; 3], [0; 3], ActivationKind::Linear).is_err());
        assert!(Conv3d::new(Tensor::zeros(&[2, 1, 3, 3, 3]).unwrap(), vec![0.0], [1; 3], [0; 3], ActivationKind::Linear).is_err());
    }
}
