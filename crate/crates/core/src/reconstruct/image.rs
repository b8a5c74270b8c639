use std::io::Write;
use std::path::Path;

use glam::DVec4;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("float dump is malformed")]
    Malformed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Linear premultiplied rgba with a depth and object id per pixel.
///
/// Depth holds the view depth of the surface that produced the pixel and
/// stays at `+inf` where nothing was drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<DVec4>,
    pub depth: Vec<f64>,
    pub object_ids: Vec<Option<u32>>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, background: DVec4) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            pixels: vec![background; n],
            depth: vec![f64::INFINITY; n],
            object_ids: vec![None; n],
        }
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> DVec4 {
        self.pixels[self.index(x, y)]
    }

    pub fn object_id(&self, x: u32, y: u32) -> Option<u32> {
        self.object_ids[self.index(x, y)]
    }

    pub fn covered(&self) -> usize {
        self.object_ids.iter().filter(|id| id.is_some()).count()
    }

    /// 8-bit sRGB encoding of the color channels.
    pub fn to_srgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .map(|c| (linear_to_srgb(c) * 255.0).round() as u8)
            .collect()
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_srgb8());
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<(), ImageError> {
        std::fs::write(path, self.to_ppm())?;
        Ok(())
    }

    /// Width and height as `u32`, then rgba per pixel as `f32`, all
    /// little-endian.
    pub fn to_float_dump(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 16 * self.pixels.len());
        out.write_all(&self.width.to_le_bytes()).unwrap();
        out.write_all(&self.height.to_le_bytes()).unwrap();
        for p in &self.pixels {
            for c in p.to_array() {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn write_float_dump(&self, path: &Path) -> Result<(), ImageError> {
        std::fs::write(path, self.to_float_dump())?;
        Ok(())
    }

    /// Reads a float dump back into `(width, height, rgba)`.
    pub fn parse_float_dump(bytes: &[u8]) -> Result<(u32, u32, Vec<[f32; 4]>), ImageError> {
        let word = |i: usize| -> Result<[u8; 4], ImageError> {
            bytes.get(i..i + 4).and_then(|s| s.try_into().ok()).ok_or(ImageError::Malformed)
        };
        let width = u32::from_le_bytes(word(0)?);
        let height = u32::from_le_bytes(word(4)?);
        let n = width as usize * height as usize;
        if bytes.len() != 8 + 16 * n {
            return Err(ImageError::Malformed);
        }
        let pixels = bytes[8..]
            .chunks_exact(16)
            .map(|px| std::array::from_fn(|k| f32::from_le_bytes(px[4 * k..4 * k + 4].try_into().unwrap())))
            .collect();
        Ok((width, height, pixels))
    }
}

pub fn linear_to_srgb(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_buffer() {
        let img = ImageBuffer::new(3, 2, DVec4::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(img.pixels.len(), 6);
        assert!(img.depth.iter().all(|d| *d == f64::INFINITY));
        assert_eq!(img.covered(), 0);
        assert_eq!(img.index(2, 1), 5);
    }

    #[test]
    fn ppm_header_and_encoding() {
        let mut img = ImageBuffer::new(2, 1, DVec4::ZERO);
        img.pixels[1] = DVec4::new(1.0, 0.5, 0.0, 1.0);
        let ppm = img.to_ppm();
        let header = b"P6\n2 1\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        // linear 0.5 encodes to sRGB 188
        assert_eq!(&ppm[header.len()..], &[0, 0, 0, 255, 188, 0]);
    }

    #[test]
    fn srgb_curve_endpoints() {
        assert_eq!(linear_to_srgb(0.0), 0.0);
        assert!((linear_to_srgb(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(linear_to_srgb(2.0), linear_to_srgb(1.0));
        assert!((linear_to_srgb(0.002) - 0.02584).abs() < 1e-9);
    }

    #[test]
    fn float_dump_roundtrip() {
        let mut img = ImageBuffer::new(2, 2, DVec4::ZERO);
        img.pixels[3] = DVec4::new(0.25, 0.5, 0.75, 1.0);
        let bytes = img.to_float_dump();
        assert_eq!(bytes.len(), 8 + 4 * 16);
        let (w, h, px) = ImageBuffer::parse_float_dump(&bytes).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px[3], [0.25, 0.5, 0.75, 1.0]);
        assert!(ImageBuffer::parse_float_dump(&bytes[..bytes.len() - 1]).is_err());
    }
}
