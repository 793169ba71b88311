//! NVOL: `"NV01"`, three little-endian `u32` extents `dx, dy, dz`, then
//! `dx*dy*dz` little-endian `f32` values with x fastest.
//!
//! Volumes are stored `(D, H, W)` with W fastest, so `dx = W`, `dy = H`,
//! `dz = D` and the payload order matches memory order directly.

use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::tensor::Volume;

pub const MAGIC: &[u8; 4] = b"NV01";
const HEADER: usize = 16;

pub fn encode(v: &Volume) -> Vec<u8> {
    let [d, h, w] = v.dims();
    let mut out = Vec::with_capacity(HEADER + 4 * v.len());
    out.extend_from_slice(MAGIC);
    for e in [w, h, d] {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    for x in v.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("not an NVOL file (bad magic or short header)".into()));
    }
    let ext = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (dx, dy, dz) = (ext(0), ext(1), ext(2));
    if dx == 0 || dy == 0 || dz == 0 {
        return Err(Error::Format(format!("zero extent in {dx}x{dy}x{dz}")));
    }
    let n = dx
        .checked_mul(dy)
        .and_then(|v| v.checked_mul(dz))
        .ok_or_else(|| Error::Format("extents overflow".into()))?;
    if bytes.len() != HEADER + 4 * n {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {} for {dx}x{dy}x{dz}",
            bytes.len(),
            HEADER + 4 * n
        )));
    }
    let data = bytes[HEADER..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Volume::new([dz, dy, dx], data)
}

pub fn write_nvol(path: &Path, v: &Volume) -> Result<()> {
    write_atomic(path, &encode(v))
}

pub fn read_nvol(path: &Path) -> Result<Volume> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let v = Volume::new([2, 3, 4], (0..24).map(|i| i as f32).collect()).unwrap();
        let b = encode(&v);
        assert_eq!(b.len(), 16 + 4 * 24);
        assert_eq!(&b[4..8], &4u32.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        // second value along x
        assert_eq!(&b[20..24], &1.0f32.to_le_bytes());
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"NV02\0\0\0\0").is_err());
        let v = Volume::filled([1, 1, 2], 1.0).unwrap();
        let mut b = encode(&v);
        b.pop();
        assert!(decode(&b).is_err());
        let mut b = encode(&v);
        b[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode(&b), Err(Error::NonFinite(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(d in 1usize..5, h in 1usize..5, w in 1usize..5, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let data: Vec<f32> = (0..d * h * w).map(|_| rng.gen_range(-1e6f32..1e6)).collect();
            let v = Volume::new([d, h, w], data).unwrap();
            let back = decode(&encode(&v)).unwrap();
            prop_assert_eq!(back.dims(), v.dims());
            for (a, b) in back.data().iter().zip(v.data()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
