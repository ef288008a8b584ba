//! Parameter files: `"BCGP"`, version u32, tensor count u32, then per tensor
//! rank u32, dims u32[rank], values f64[prod(dims)]. All little-endian.

use std::fs;
use std::path::Path;

use super::mlp::{DenseLayer, Mlp};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"BCGP";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_tensors<T: Scalar>(tensors: &[&Tensor<T>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_f64_exact().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated while reading {what}"),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, "value")?.try_into().expect("8 bytes")))
    }
}

pub fn decode_tensors<T: Scalar>(buf: &[u8]) -> Result<Vec<Tensor<T>>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic, expected BCGP"));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let count = r.u32("tensor count")? as usize;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = r.u32("rank")? as usize;
        let mut dims = Vec::with_capacity(rank.min(16));
        for _ in 0..rank {
            dims.push(r.u32("dim")? as usize);
        }
        let n: usize = dims.iter().product();
        if (r.buf.len() - r.pos) / 8 < n {
            return Err(Error::format(
                r.pos as u64,
                format!("payload holds fewer than {n} values for dims {dims:?}"),
            ));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(T::of(r.f64()?));
        }
        out.push(Tensor::new(dims, data)?);
    }
    if r.pos != buf.len() {
        return Err(Error::format(
            r.pos as u64,
            format!("{} trailing bytes", buf.len() - r.pos),
        ));
    }
    Ok(out)
}

pub fn save_params<T: Scalar>(net: &Mlp<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tensors(&net.params()))?;
    Ok(())
}

/// Replaces `net`'s parameters with those in `path`; every tensor's dims
/// must match the network's declared layout.
pub fn load_params<T: Scalar>(net: &mut Mlp<T>, path: impl AsRef<Path>) -> Result<()> {
    let bytes = fs::read(path)?;
    let loaded = decode_tensors::<T>(&bytes)?;
    *net = replace_params(net, loaded)?;
    Ok(())
}

pub(crate) fn replace_params<T: Scalar>(net: &Mlp<T>, loaded: Vec<Tensor<T>>) -> Result<Mlp<T>> {
    let expected = net.params();
    if loaded.len() != expected.len() {
        return Err(Error::format(
            8,
            format!("{} tensors in file, network has {}", loaded.len(), expected.len()),
        ));
    }
    for (l, e) in loaded.iter().zip(&expected) {
        if l.shape() != e.shape() {
            return Err(Error::dims("load_params", e.shape(), l.shape()));
        }
    }
    let mut it = loaded.into_iter();
    let layers = net
        .layers()
        .iter()
        .map(|l| DenseLayer {
            weight: it.next().expect("counted"),
            bias: it.next().expect("counted"),
            activation: l.activation,
        })
        .collect();
    Mlp::from_layers(layers)
}
