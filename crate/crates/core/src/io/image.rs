//! Heat maps as binary Netpbm images.
//!
//! Grayscale: PGM `P5`, maxval 65535, big-endian 16-bit samples, rows top
//! to bottom. Color: PPM `P6`, maxval 255, RGB bytes. A value `v` maps to
//! intensity `round((v - min) / (max - min) * maxval)`; when `max == min`
//! every pixel is 0. The bounds and mapping go in a JSON sidecar next to
//! the image (`<image>.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Colormap anchors, evenly spaced over `[0, 1]` and linearly interpolated.
pub const COLORMAP: [[u8; 3]; 5] = [
    [0, 0, 4],
    [87, 16, 110],
    [188, 55, 84],
    [249, 142, 9],
    [252, 255, 164],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub format: String,
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub min: f64,
    pub max: f64,
    pub mapping: String,
    /// Colormap anchors for PPM output.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub colormap: Option<Vec<[u8; 3]>>,
}

fn bounds(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite pixel at index {i}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Position of `v` in `[0, 1]`, 0 for a uniform image.
fn unit(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn check_shape(values: &[f64], width: usize, height: usize) -> Result<()> {
    if width * height != values.len() || width == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    Ok(())
}

/// PGM bytes and sidecar for a row-major `height x width` map.
pub fn encode_pgm(values: &[f64], width: usize, height: usize) -> Result<(Vec<u8>, ImageSidecar)> {
    check_shape(values, width, height)?;
    let (min, max) = bounds(values)?;
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for &v in values {
        let q = (unit(v, min, max) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    let sidecar = ImageSidecar {
        format: "pgm-p5-16bit-be".into(),
        width,
        height,
        maxval: 65535,
        min,
        max,
        mapping: "linear-minmax".into(),
        colormap: None,
    };
    Ok((out, sidecar))
}

/// Color for a position in `[0, 1]`.
pub fn colorize(t: f64) -> [u8; 3] {
    let segments = (COLORMAP.len() - 1) as f64;
    let pos = t.clamp(0.0, 1.0) * segments;
    let k = (pos.floor() as usize).min(COLORMAP.len() - 2);
    let f = pos - k as f64;
    let (a, b) = (COLORMAP[k], COLORMAP[k + 1]);
    std::array::from_fn(|c| (a[c] as f64 + (b[c] as f64 - a[c] as f64) * f).round() as u8)
}

pub fn encode_ppm(values: &[f64], width: usize, height: usize) -> Result<(Vec<u8>, ImageSidecar)> {
    check_shape(values, width, height)?;
    let (min, max) = bounds(values)?;
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for &v in values {
        out.extend_from_slice(&colorize(unit(v, min, max)));
    }
    let sidecar = ImageSidecar {
        format: "ppm-p6-8bit".into(),
        width,
        height,
        maxval: 255,
        min,
        max,
        mapping: "linear-minmax-colormap".into(),
        colormap: Some(COLORMAP.to_vec()),
    };
    Ok((out, sidecar))
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut name = image.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn write_with_sidecar(path: &Path, bytes: &[u8], sidecar: &ImageSidecar) -> Result<()> {
    std::fs::write(path, bytes)?;
    std::fs::write(sidecar_path(path), serde_json::to_vec_pretty(sidecar)?)?;
    Ok(())
}

pub fn write_pgm(path: &Path, values: &[f64], width: usize, height: usize) -> Result<ImageSidecar> {
    let (bytes, sidecar) = encode_pgm(values, width, height)?;
    write_with_sidecar(path, &bytes, &sidecar)?;
    Ok(sidecar)
}

pub fn write_ppm(path: &Path, values: &[f64], width: usize, height: usize) -> Result<ImageSidecar> {
    let (bytes, sidecar) = encode_ppm(values, width, height)?;
    write_with_sidecar(path, &bytes, &sidecar)?;
    Ok(sidecar)
}

/// Parses a `P5` 16-bit image into `(width, height, samples)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let bad = |msg: &str| Error::Format {
        path: PathBuf::new(),
        msg: msg.to_owned(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(bad("expected a 16-bit P5 image"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dimension"));
    let (w, h) = (parse(fields[1])?, parse(fields[2])?);
    let body = bytes.get(pos..).ok_or_else(|| bad("missing pixel data"))?;
    if body.len() != 2 * w * h {
        return Err(bad("pixel payload length mismatch"));
    }
    let samples = body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((w, h, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout_is_exact() {
        let (bytes, side) = encode_pgm(&[0.0, 0.5, 1.0, 0.25], 2, 2).unwrap();
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 0, 0x80, 0x00, 0xff, 0xff, 0x40, 0x00]);
        assert_eq!((side.min, side.max), (0.0, 1.0));
        let (w, h, px) = decode_pgm(&bytes).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![0, 32768, 65535, 16384]);
    }

    #[test]
    fn uniform_image_maps_to_zero() {
        let (bytes, _) = encode_pgm(&[3.0; 6], 3, 2).unwrap();
        assert!(decode_pgm(&bytes).unwrap().2.iter().all(|&p| p == 0));
        let (bytes, _) = encode_ppm(&[3.0; 6], 3, 2).unwrap();
        let body = &bytes[b"P6\n3 2\n255\n".len()..];
        assert_eq!(body.len(), 18);
        assert!(body.chunks(3).all(|c| c == COLORMAP[0]));
    }

    #[test]
    fn colormap_hits_anchors() {
        assert_eq!(colorize(0.0), COLORMAP[0]);
        assert_eq!(colorize(1.0), COLORMAP[4]);
        assert_eq!(colorize(0.5), COLORMAP[2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(encode_pgm(&[1.0, 2.0], 3, 1).is_err());
        assert!(encode_pgm(&[f64::NAN], 1, 1).is_err());
        assert!(decode_pgm(b"P6\n1 1\n255\nabc").is_err());
    }
}
