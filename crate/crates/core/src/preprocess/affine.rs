use crate::error::{Error, Result};
use crate::tensor::Volume;

/// Homogeneous 4x4 transform acting on voxel coordinates `(x, y, z)`, where
/// `x` indexes W (fastest), `y` indexes H and `z` indexes D. The bottom row
/// is always `(0, 0, 0, 1)`, leaving twelve free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMatrix([[f64; 4]; 4]);

const BOTTOM: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

impl AffineMatrix {
    pub const IDENTITY: AffineMatrix = AffineMatrix([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        BOTTOM,
    ]);

    /// From the twelve parameters `a00..a23`, row-major.
    pub fn from_params(p: [f64; 12]) -> Result<Self> {
        let m = AffineMatrix([
            [p[0], p[1], p[2], p[3]],
            [p[4], p[5], p[6], p[7]],
            [p[8], p[9], p[10], p[11]],
            BOTTOM,
        ]);
        m.check()?;
        Ok(m)
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        if rows[3] != BOTTOM {
            return Err(Error::InvalidArgument(format!("affine bottom row must be (0,0,0,1), got {:?}", rows[3])));
        }
        let m = AffineMatrix(rows);
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let d = self.det3();
        if self.0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine entry".into()));
        }
        if d.abs() < 1e-12 {
            return Err(Error::SingularMatrix(d));
        }
        Ok(())
    }

    pub fn params(&self) -> [f64; 12] {
        let r = &self.0;
        [
            r[0][0], r[0][1], r[0][2], r[0][3], r[1][0], r[1][1], r[1][2], r[1][3], r[2][0], r[2][1], r[2][2],
            r[2][3],
        ]
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn translation(t: [f64; 3]) -> Self {
        let mut m = Self::IDENTITY;
        for (i, v) in t.into_iter().enumerate() {
            m.0[i][3] = v;
        }
        m
    }

    pub fn scaling(s: [f64; 3]) -> Result<Self> {
        let mut m = Self::IDENTITY;
        for (i, v) in s.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m.check()?;
        Ok(m)
    }

    /// Rotation by `angles_deg` about x, then y, then z (`Rz * Ry * Rx`).
    pub fn rotation(angles_deg: [f64; 3]) -> Self {
        let [ax, ay, az] = angles_deg.map(f64::to_radians);
        let (sx, cx) = ax.sin_cos();
        let (sy, cy) = ay.sin_cos();
        let (sz, cz) = az.sin_cos();
        let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
        let r = mul3(&rz, &mul3(&ry, &rx));
        let mut m = Self::IDENTITY;
        for i in 0..3 {
            m.0[i][..3].copy_from_slice(&r[i]);
        }
        m
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &AffineMatrix) -> AffineMatrix {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        AffineMatrix(out)
    }

    /// Conjugates the transform so it acts about `center` instead of the origin.
    pub fn about(&self, center: [f64; 3]) -> AffineMatrix {
        Self::translation(center)
            .compose(self)
            .compose(&Self::translation(center.map(|c| -c)))
    }

    pub fn det3(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<AffineMatrix> {
        let d = self.det3();
        if d.abs() < 1e-12 || !d.is_finite() {
            return Err(Error::SingularMatrix(d));
        }
        let m = &self.0;
        let mut inv = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                // adjugate: cofactor of (j, i)
                let (r0, r1) = others(j);
                let (c0, c1) = others(i);
                let cof = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                inv[i][j] = sign * cof / d;
            }
        }
        for i in 0..3 {
            inv[i][3] = -(0..3).map(|k| inv[i][k] * m[k][3]).sum::<f64>();
        }
        inv[3] = BOTTOM;
        Ok(AffineMatrix(inv))
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
        ]
    }

    pub fn max_abs_diff(&self, other: &AffineMatrix) -> f64 {
        self.0.iter().flatten().zip(other.0.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn mul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `T * R * S`: isotropic scale, then rotation (degrees, about x, y, z),
/// then translation (voxels).
pub fn make_similarity(scale: f64, angles_deg: [f64; 3], translation: [f64; 3]) -> Result<AffineMatrix> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("similarity scale {scale} must be positive")));
    }
    Ok(AffineMatrix::translation(translation)
        .compose(&AffineMatrix::rotation(angles_deg))
        .compose(&AffineMatrix::scaling([scale; 3])?))
}

/// Resamples `v` so that output voxel `c'` takes the trilinear sample of the
/// input at `A^-1 c'`. Neighbours outside the input read as zero.
pub fn affine_resample(v: &Volume, a: &AffineMatrix, out_shape: [usize; 3]) -> Result<Volume> {
    if out_shape.contains(&0) {
        return Err(Error::InvalidShape(format!("output shape {out_shape:?}")));
    }
    let inv = a.inverse()?;
    let [od, oh, ow] = out_shape;
    let dims = v.dims();
    let src = v.data();
    let mut out = Vec::with_capacity(od * oh * ow);
    for z in 0..od {
        for y in 0..oh {
            for x in 0..ow {
                let p = inv.apply([x as f64, y as f64, z as f64]);
                out.push(trilinear(src, dims, p));
            }
        }
    }
    let mut res = Volume::from_parts(out_shape, out);
    res.tensor().check_finite("resampled volume")?;
    res.voxel_size = v.voxel_size;
    Ok(res)
}

#[inline]
fn trilinear(src: &[f32], [d, h, w]: [usize; 3], p: [f64; 3]) -> f32 {
    let [px, py, pz] = p;
    if px <= -1.0 || py <= -1.0 || pz <= -1.0 || px >= w as f64 || py >= h as f64 || pz >= d as f64 {
        return 0.0;
    }
    let (x0, y0, z0) = (px.floor(), py.floor(), pz.floor());
    let (fx, fy, fz) = (px - x0, py - y0, pz - z0);
    let (x0, y0, z0) = (x0 as isize, y0 as isize, z0 as isize);
    let mut acc = 0.0f64;
    for (dz, wz) in [(0, 1.0 - fz), (1, fz)] {
        let zz = z0 + dz;
        if wz == 0.0 || zz < 0 || zz >= d as isize {
            continue;
        }
        for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
            let yy = y0 + dy;
            if wy == 0.0 || yy < 0 || yy >= h as isize {
                continue;
            }
            let row = (zz as usize * h + yy as usize) * w;
            for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                let xx = x0 + dx;
                if wx == 0.0 || xx < 0 || xx >= w as isize {
                    continue;
                }
                acc += wz * wy * wx * src[row + xx as usize] as f64;
            }
        }
    }
    acc as f32
}

/// Scale-only resampling onto `target` `(D, H, W)`. Voxel centres are
/// aligned, so the map is `x_out = s * (x_in + 1/2) - 1/2` per axis with
/// `s = out / in`.
pub fn resample_to_input_shape(v: &Volume, target: [usize; 3]) -> Result<Volume> {
    let dims = v.dims();
    if dims == target {
        return Ok(v.clone());
    }
    // (x, y, z) order is (W, H, D)
    let s = [target[2] as f64 / dims[2] as f64, target[1] as f64 / dims[1] as f64, target[0] as f64 / dims[0] as f64];
    let a = AffineMatrix::translation(s.map(|k| 0.5 * k - 0.5)).compose(&AffineMatrix::scaling(s)?);
    affine_resample(v, &a, target)
}
