//! Float tensor exchange format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic  8 bytes   "CONVDIF1"
//! ndim   u32
//! dims   ndim x u32
//! data   prod(dims) x f32, row-major
//! ```
//!
//! Images are stored as `[channels, height, width]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub const MAGIC: &[u8; 8] = b"CONVDIF1";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if dims.is_empty() || expected != data.len() {
            return Err(Error::mismatch(
                format!("{expected} values for dims {dims:?}"),
                format!("{} values", data.len()),
            ));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::invalid("tensor dimension exceeds u32"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite tensor value at index {pos}"
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn from_image(img: &Image) -> Self {
        Self {
            dims: vec![img.channels(), img.height(), img.width()],
            data: img.data().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Accepts `[channels, height, width]` or `[height, width]`.
    pub fn to_image(&self) -> Result<Image> {
        let (c, h, w) = match self.dims.as_slice() {
            &[c, h, w] => (c, h, w),
            &[h, w] => (1, h, w),
            other => {
                return Err(Error::invalid(format!(
                    "image tensors need 2 or 3 dims, got {other:?}"
                )))
            }
        };
        Image::new(h, w, c, self.data.iter().map(|&v| v as f64).collect())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], path: Option<&Path>) -> Result<Self> {
        let err = |offset: usize, message: String| Error::Parse {
            path: path.map(Path::to_path_buf),
            offset,
            message,
        };
        let read_u32 = |offset: usize| -> Result<u32> {
            bytes
                .get(offset..offset + 4)
                .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .ok_or_else(|| err(bytes.len(), "truncated header".into()))
        };
        if bytes.get(..8) != Some(MAGIC.as_slice()) {
            return Err(err(0, "bad magic, expected CONVDIF1".into()));
        }
        let ndim = read_u32(8)? as usize;
        if ndim == 0 || ndim > 8 {
            return Err(err(8, format!("unsupported ndim {ndim}")));
        }
        let dims = (0..ndim)
            .map(|i| read_u32(12 + 4 * i).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let start = 12 + 4 * ndim;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| err(12, "dims overflow".into()))?;
        let payload = &bytes[start..];
        if payload.len() != 4 * count {
            return Err(err(
                start + payload.len().min(4 * count),
                format!("payload is {} bytes, expected {}", payload.len(), 4 * count),
            ));
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(err(start + 4 * pos, "non-finite value".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode())
            .map_err(|e| Error::io(format!("cannot write tensor {}", path.display()), e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| Error::io(format!("cannot read tensor {}", path.display()), e))?;
        Self::decode(&bytes, Some(path))
    }
}

pub fn write_image_tensor(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    Tensor::from_image(img).write(path)
}

pub fn read_image_tensor(path: impl AsRef<Path>) -> Result<Image> {
    Tensor::read(path)?.to_image()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_byte_layout() {
        let t = Tensor::new(vec![1, 2], vec![1.0, -2.5]).unwrap();
        let bytes = t.encode();
        let mut expected = b"CONVDIF1".to_vec();
        expected.extend_from_slice(&[2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.5f32).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(Tensor::decode(&bytes, None).unwrap(), t);
    }

    #[test]
    fn malformed_inputs() {
        let t = Tensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
        let bytes = t.encode();
        assert!(Tensor::decode(&bytes[..bytes.len() - 1], None).is_err());
        assert!(Tensor::decode(b"CONVDIF0\x01\0\0\0", None).is_err());
        assert!(Tensor::decode(b"CONVDIF1\x01\0", None).is_err());
        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(Tensor::decode(&nan, None).is_err());
        assert!(Tensor::new(vec![3], vec![0.0; 2]).is_err());
        assert!(Tensor::new(vec![2, 2, 2, 2], vec![0.0; 16])
            .unwrap()
            .to_image()
            .is_err());
    }

    proptest! {
        #[test]
        fn image_values_survive_round_trip(
            h in 8usize..24, w in 8usize..24, color in any::<bool>(), seed in any::<u64>()
        ) {
            use rand::{Rng, SeedableRng};
            let c = if color { 3 } else { 1 };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data = (0..h * w * c).map(|_| rng.random::<f64>()).collect();
            let img = Image::new(h, w, c, data).unwrap();
            let back = Tensor::decode(&Tensor::from_image(&img).encode(), None)
                .unwrap()
                .to_image()
                .unwrap();
            prop_assert_eq!(back.shape(), img.shape());
            for (a, b) in img.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() <= 1e-7);
            }
        }
    }
}
