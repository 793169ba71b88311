//! Model checkpoints.
//!
//! ```text
//! "PDW1"  u32 version  u64 seed  [u8; 32] config digest
//! u32 len, spec JSON
//! u32 block count, then per block: u32 rank, rank x u32 extents, f32 data
//! ```
//! All integers and reals are little-endian.

use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::model::{ArchitectureSpec, Model};

pub const MAGIC: &[u8; 4] = b"PDW1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub seed: u64,
    pub config_digest: [u8; 32],
}

pub fn encode(model: &Model, config_digest: [u8; 32]) -> Result<Vec<u8>> {
    let spec = serde_json::to_vec(&model.spec)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.seed.to_le_bytes());
    out.extend_from_slice(&config_digest);
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec);
    let shapes = model.param_shapes();
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for (shape, block) in shapes.iter().zip(model.param_blocks()) {
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &e in shape {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for x in block {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let config_digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let spec_len = r.u32()? as usize;
    let spec: ArchitectureSpec = serde_json::from_slice(r.take(spec_len)?)?;
    let mut model = Model::build(spec, seed)?;
    let expected = model.param_shapes();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::Format(format!("{count} parameter blocks, spec implies {}", expected.len())));
    }
    let mut blocks = Vec::with_capacity(count);
    for (i, want) in expected.iter().enumerate() {
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if &shape != want {
            return Err(Error::Format(format!("block {i} declares {shape:?}, spec implies {want:?}")));
        }
        let n: usize = shape.iter().product();
        let data: Vec<f32> =
            r.take(4 * n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        crate::tensor::check_finite(&data, &format!("checkpoint block {i}"))?;
        blocks.push(data);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    for (dst, src) in model.param_blocks_mut().into_iter().zip(blocks) {
        dst.copy_from_slice(&src);
    }
    Ok(Checkpoint { model, seed, config_digest })
}

pub fn save_checkpoint(path: &Path, model: &Model, config_digest: [u8; 32]) -> Result<()> {
    write_atomic(path, &encode(model, config_digest)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActivationFamily;

    fn small() -> Model {
        let spec = ArchitectureSpec::alexnet3d(ActivationFamily::Selu)
            .with_input_shape([24, 28, 24])
            .with_width_scale(0.5);
        Model::build(spec, 77).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = small();
        // perturb so the stored values differ from a fresh build
        m.param_blocks_mut()[1][0] = 0.25;
        let bytes = encode(&m, [7; 32]).unwrap();
        let ck = decode(&bytes).unwrap();
        assert_eq!(ck.config_digest, [7; 32]);
        assert_eq!(ck.seed, 77);
        for (a, b) in ck.model.param_blocks().iter().zip(m.param_blocks()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(encode(&ck.model, [7; 32]).unwrap(), bytes);
    }

    #[test]
    fn corrupt_checkpoints_rejected() {
        let bytes = encode(&small(), [0; 32]).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(decode(&b).is_err());
        let mut b = bytes.clone();
        b.push(0);
        assert!(decode(&b).is_err());
    }
}
