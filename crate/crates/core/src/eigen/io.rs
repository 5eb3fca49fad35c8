//! Binary model files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "EIGF" | version u16 | d u32 | k u32 | N u32 | width u32 | height u32
//! mean d*f64 | basis k*d*f64 | eigenvalues k*f64
//! threshold_sed f64 | threshold_cityblock f64
//! gallery N*k*f64 | N labels (u32 byte length + UTF-8)
//! crc32 u32 over every preceding byte
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{EigenModel, Thresholds};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"EIGF";
pub const MODEL_VERSION: u16 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::InvalidParameter(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(buf: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes `model` to bytes.
pub fn encode_model(model: &EigenModel) -> Result<Vec<u8>> {
    let d = model.mean.len();
    let k = model.basis.len();
    let n = model.gallery.len();
    let mut buf = Vec::with_capacity(32 + 8 * (d * (k + 1) + k * (n + 1) + 2));
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [d, k, n, model.width, model.height] {
        put_u32(&mut buf, v)?;
    }
    put_f64s(&mut buf, &model.mean);
    for b in &model.basis {
        put_f64s(&mut buf, b);
    }
    put_f64s(&mut buf, &model.eigenvalues);
    put_f64s(
        &mut buf,
        &[
            model.thresholds.squared_euclidean,
            model.thresholds.city_block,
        ],
    );
    for g in &model.gallery {
        put_f64s(&mut buf, g);
    }
    for l in &model.labels {
        put_u32(&mut buf, l.len())?;
        buf.extend_from_slice(l.as_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::CorruptModel(format!("payload ends early at byte {}", self.pos))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::CorruptModel("size overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses and validates a model from bytes.
pub fn decode_model(bytes: &[u8]) -> Result<EigenModel> {
    if bytes.len() < 4 + 2 + 20 + 4 {
        return Err(Error::CorruptModel(format!(
            "file is only {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::CorruptModel("checksum mismatch".into()));
    }
    let version = u16::from_le_bytes([body[4], body[5]]);
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let mut c = Cursor { buf: body, pos: 6 };
    let d = c.u32()?;
    let k = c.u32()?;
    let n = c.u32()?;
    let width = c.u32()?;
    let height = c.u32()?;
    if width.checked_mul(height) != Some(d) {
        return Err(Error::InvariantViolation(format!(
            "d = {d} but geometry is {width}x{height}"
        )));
    }
    let mean = c.f64s(d)?;
    let basis = (0..k).map(|_| c.f64s(d)).collect::<Result<Vec<_>>>()?;
    let eigenvalues = c.f64s(k)?;
    let t = c.f64s(2)?;
    let gallery = (0..n).map(|_| c.f64s(k)).collect::<Result<Vec<_>>>()?;
    let labels = (0..n)
        .map(|_| {
            let len = c.u32()?;
            String::from_utf8(c.take(len)?.to_vec())
                .map_err(|_| Error::CorruptModel("label is not UTF-8".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    if c.pos != body.len() {
        return Err(Error::CorruptModel(format!(
            "{} trailing bytes after the labels",
            body.len() - c.pos
        )));
    }
    EigenModel::from_parts(
        width,
        height,
        mean,
        basis,
        eigenvalues,
        gallery,
        labels,
        Thresholds {
            squared_euclidean: t[0],
            city_block: t[1],
        },
    )
}

pub fn write_model(model: &EigenModel, mut w: impl Write) -> Result<()> {
    let bytes = encode_model(model)?;
    w.write_all(&bytes)
        .map_err(|e| Error::io(Path::new("<stream>"), e))
}

pub fn read_model(mut r: impl Read) -> Result<EigenModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io(Path::new("<stream>"), e))?;
    decode_model(&bytes)
}

pub fn save_model(model: &EigenModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EigenModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
