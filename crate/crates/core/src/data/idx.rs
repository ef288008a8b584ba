//! IDX files (MNIST layout): big-endian u32 magic and dims, then u8 payload.

use std::fs;
use std::path::Path;

use super::{Dataset, Family, Split};
use crate::autodiff::Tensor;
use crate::bicogan::ExtrinsicSpec;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IDX_CLASSES: usize = 10;

fn be_u32(buf: &[u8], offset: usize, what: &str) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(offset as u64, format!("truncated {what}")))
}

/// Parses an images file into (count, rows, cols, pixels).
pub fn parse_images(buf: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(buf, 0, "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(0, format!("images magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let n = be_u32(buf, 4, "image count")? as usize;
    let rows = be_u32(buf, 8, "row count")? as usize;
    let cols = be_u32(buf, 12, "column count")? as usize;
    let payload = &buf[16..];
    let expected = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::format(4, format!("dims {n}×{rows}×{cols} overflow")))?;
    if payload.len() != expected {
        return Err(Error::format(
            (16 + payload.len().min(expected)) as u64,
            format!("header declares {n}×{rows}×{cols} = {expected} pixel bytes, payload has {}", payload.len()),
        ));
    }
    Ok((n, rows, cols, payload))
}

pub fn parse_labels(buf: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(buf, 0, "magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(0, format!("labels magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let n = be_u32(buf, 4, "label count")? as usize;
    let payload = &buf[8..];
    if payload.len() != n {
        return Err(Error::format(
            (8 + payload.len().min(n)) as u64,
            format!("header declares {n} labels, payload has {}", payload.len()),
        ));
    }
    if let Some(pos) = payload.iter().position(|&l| l as usize >= IDX_CLASSES) {
        return Err(Error::format((8 + pos) as u64, format!("label {} out of range", payload[pos])));
    }
    Ok(payload)
}

pub fn pixel_to_unit(v: u8) -> f64 {
    v as f64 / 127.5 - 1.0
}

pub fn unit_to_pixel(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

pub fn decode_idx(images: &[u8], labels: &[u8], split: Split) -> Result<Dataset> {
    let (n, rows, cols, pixels) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if labels.len() != n {
        return Err(Error::format(4, format!("{n} images but {} labels", labels.len())));
    }
    let extrinsic = ExtrinsicSpec::categorical(IDX_CLASSES);
    let mut c = Vec::with_capacity(n * IDX_CLASSES);
    for &l in labels {
        c.extend(extrinsic.one_hot::<f64>(l as usize));
    }
    Ok(Dataset {
        x: Tensor::new(vec![n, rows * cols], pixels.iter().map(|&p| pixel_to_unit(p)).collect())?,
        c: Tensor::new(vec![n, IDX_CLASSES], c)?,
        extrinsic,
        intrinsic_truth: None,
        split,
        family: Family::Idx,
        image_shape: Some((rows, cols)),
        angle_range: None,
    })
}

pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    decode_idx(&fs::read(images)?, &fs::read(labels)?, split)
}

/// Serialises a categorical image dataset back to (images, labels) IDX bytes.
pub fn encode_idx(ds: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let (rows, cols) = ds
        .image_shape
        .ok_or_else(|| Error::Unsupported("IDX export needs an image dataset".into()))?;
    let n = ds.len();
    let mut images = Vec::with_capacity(16 + n * rows * cols);
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend(ds.x.data().iter().map(|&v| unit_to_pixel(v)));
    let mut labels = Vec::with_capacity(8 + n);
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(n as u32).to_be_bytes());
    labels.extend(ds.c.argmax_rows().into_iter().map(|l| l as u8));
    Ok((images, labels))
}
