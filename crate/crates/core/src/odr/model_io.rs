//! Binary model file: magic `ODR1`, version and layer count as u32, the
//! layer sizes as u32, then for each layer its `out x in` weights
//! (row-major) followed by its biases. Everything little-endian; values
//! are 64-bit floats.

use super::mlp::MlpParams;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ODR1";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_model(params: &MlpParams) -> Vec<u8> {
    let sizes = params.layer_sizes();
    let n_values: usize = params.weights().iter().chain(params.biases()).map(Vec::len).sum();
    let mut out = Vec::with_capacity(12 + 4 * sizes.len() + 8 * n_values);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for (w, b) in params.weights().iter().zip(params.biases()) {
        for v in w.iter().chain(b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
                available: self.data.len() - self.pos,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Argument("layer too large".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load_model(data: &[u8]) -> Result<MlpParams> {
    let mut r = Reader { data, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion(version));
    }
    let count = r.u32()? as usize;
    if count < 2 {
        return Err(Error::Argument(format!("model lists {count} layers, need at least 2")));
    }
    let sizes = (0..count)
        .map(|_| r.u32().map(|s| s as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut weights = Vec::with_capacity(count - 1);
    let mut biases = Vec::with_capacity(count - 1);
    for pair in sizes.windows(2) {
        let n = pair[0]
            .checked_mul(pair[1])
            .ok_or_else(|| Error::Argument("layer too large".into()))?;
        weights.push(r.f64s(n)?);
        biases.push(r.f64s(pair[1])?);
    }
    MlpParams::from_parts(sizes, weights, biases)
}
