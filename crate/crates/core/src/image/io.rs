//! PGM (P2/P5) and PNG reading and writing.
//!
//! Files are sniffed by content, not extension. Writing picks PNG when the
//! path ends in `.png` and binary P5 PGM otherwise.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads a grayscale image. RGB PNGs are converted with BT.601 luma weights.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes an in-memory PGM or PNG file.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only P2/P5 graymaps are read)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat(
            "neither a PGM nor a PNG signature".into(),
        ))
    }
}

/// Writes `img` as PNG (by `.png` extension) or binary P5 PGM.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_pgm(img)
    };
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Round-half-up quantization to an 8-bit code.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::InvalidImage(format!("png encode: {e}")))?;
        let codes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
        writer
            .write_image_data(&codes)
            .map_err(|e| Error::InvalidImage(format!("png encode: {e}")))?;
    }
    Ok(out)
}

struct PgmHeader {
    ascii: bool,
    width: usize,
    height: usize,
    maxval: usize,
    payload_start: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let ascii = &bytes[..2] == b"P2";
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => {
                    return Err(Error::CorruptHeader(format!(
                        "header ends before field {}",
                        i + 1
                    )))
                }
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptHeader(format!(
                "expected a number for header field {}",
                i + 1
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::CorruptHeader(format!("number out of range: {text}")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::CorruptHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::CorruptHeader(format!(
            "maxval {maxval} out of range"
        )));
    }
    // exactly one whitespace byte separates the header from a binary payload
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        Some(_) => {
            return Err(Error::CorruptHeader(
                "missing whitespace after maxval".into(),
            ))
        }
        None if ascii => {}
        None => {}
    }
    Ok(PgmHeader {
        ascii,
        width,
        height,
        maxval,
        payload_start: pos,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_pgm_header(bytes)?;
    let n = h
        .width
        .checked_mul(h.height)
        .ok_or_else(|| Error::CorruptHeader("dimensions overflow".into()))?;
    let scale = h.maxval as f64;
    let payload = &bytes[h.payload_start.min(bytes.len())..];
    let mut data = Vec::with_capacity(n);
    if h.ascii {
        let text = std::str::from_utf8(payload)
            .map_err(|_| Error::CorruptPayload("non-ASCII data in P2 payload".into()))?;
        for tok in text.split_ascii_whitespace() {
            if data.len() == n {
                break;
            }
            let v: usize = tok
                .parse()
                .map_err(|_| Error::CorruptPayload(format!("bad sample {tok:?}")))?;
            if v > h.maxval {
                return Err(Error::CorruptPayload(format!(
                    "sample {v} exceeds maxval {}",
                    h.maxval
                )));
            }
            data.push(v as f64 / scale);
        }
        if data.len() < n {
            return Err(Error::CorruptPayload(format!(
                "expected {n} samples, found {}",
                data.len()
            )));
        }
    } else {
        let wide = h.maxval > 255;
        let need = if wide { 2 * n } else { n };
        if payload.len() < need {
            return Err(Error::CorruptPayload(format!(
                "expected {need} payload bytes, found {}",
                payload.len()
            )));
        }
        if wide {
            for pair in payload[..need].chunks_exact(2) {
                let v = u16::from_be_bytes([pair[0], pair[1]]) as usize;
                if v > h.maxval {
                    return Err(Error::CorruptPayload(format!(
                        "sample {v} exceeds maxval {}",
                        h.maxval
                    )));
                }
                data.push(v as f64 / scale);
            }
        } else {
            for &b in &payload[..need] {
                if b as usize > h.maxval {
                    return Err(Error::CorruptPayload(format!(
                        "sample {b} exceeds maxval {}",
                        h.maxval
                    )));
                }
                data.push(b as f64 / scale);
            }
        }
    }
    GrayImage::new(h.width, h.height, data)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::CorruptHeader(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptHeader("png: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::CorruptPayload(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat(
                "indexed PNG was not expanded".into(),
            ))
        }
    };
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..y * info.line_size + w * channels];
        for px in row.chunks_exact(channels) {
            let v = if channels >= 3 {
                0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64
            } else {
                px[0] as f64
            };
            data.push((v / 255.0).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_tiny_p5() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.data(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn reads_p2_with_comments() {
        let text = b"P2\n# a comment\n3 1\n# another\n10\n0 5 10\n";
        let img = decode_image(text).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128]);
        assert!(matches!(
            decode_image(&bytes),
            Err(Error::CorruptPayload(_))
        ));
    }

    #[test]
    fn bad_header_and_unsupported() {
        assert!(matches!(
            decode_image(b"P5\n2 x\n255\n"),
            Err(Error::CorruptHeader(_))
        ));
        assert!(matches!(
            decode_image(b"P6\n1 1\n255\n\0\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(b"GIF89a"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn sixteen_bit_p5() {
        let mut bytes = b"P5 1 1 65535 ".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff]);
        assert_eq!(decode_image(&bytes).unwrap().data(), &[1.0]);
    }

    #[test]
    fn p5_layout_is_exact() {
        let img = GrayImage::filled(2, 2, 0.5).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[128, 128, 128, 128]);
    }

    #[test]
    fn rgb_png_uses_bt601() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[255, 0, 0, 10, 200, 30]).unwrap();
        }
        let img = decode_image(&out).unwrap();
        assert!((img.data()[0] - 0.299).abs() < 1e-12);
        let expect = (0.299 * 10.0 + 0.587 * 200.0 + 0.114 * 30.0) / 255.0;
        assert!((img.data()[1] - expect).abs() < 1e-12);
    }
}
