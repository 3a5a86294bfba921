//! Image ingestion and the desk-scale kernels that drive the simulator.

use thiserror::Error;

use crate::memsim::MemError;

mod kernels;
mod ppm;
mod synth;

pub use kernels::{run_conv2d, run_kernel, state_for, KernelKind, KernelRun, DEFAULT_CONV_KERNEL};
pub use ppm::{load_ppm, parse_ppm, save_ppm, write_ppm};
pub use synth::{natural_image, synth_bitmap, SynthKind};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("ppm parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major, channel-interleaved raster image. 16-bit samples are held
/// little-endian so the in-memory bytes match what the write path sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitmapImage {
    pub width: u32,
    pub height: u32,
    pub cc: u8,
    pub bpc: u8,
    pub data: Vec<u8>,
}

impl BitmapImage {
    pub fn new(width: u32, height: u32, cc: u8, bpc: u8) -> BitmapImage {
        assert!(matches!(cc, 1 | 3 | 4) && matches!(bpc, 8 | 16));
        let len = width as usize * height as usize * cc as usize * (bpc as usize / 8);
        BitmapImage {
            width,
            height,
            cc,
            bpc,
            data: vec![0; len],
        }
    }

    pub fn max_value(&self) -> u32 {
        (1u32 << self.bpc) - 1
    }

    pub fn sample_count(&self) -> usize {
        self.width as usize * self.height as usize * self.cc as usize
    }

    fn offset(&self, x: u32, y: u32, c: u8) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.cc);
        ((y as usize * self.width as usize + x as usize) * self.cc as usize + c as usize)
            * (self.bpc as usize / 8)
    }

    pub fn sample(&self, x: u32, y: u32, c: u8) -> u16 {
        let off = self.offset(x, y, c);
        match self.bpc {
            8 => self.data[off] as u16,
            _ => u16::from_le_bytes([self.data[off], self.data[off + 1]]),
        }
    }

    pub fn set_sample(&mut self, x: u32, y: u32, c: u8, value: u16) {
        let off = self.offset(x, y, c);
        match self.bpc {
            8 => self.data[off] = value as u8,
            _ => self.data[off..off + 2].copy_from_slice(&value.to_le_bytes()),
        }
    }

    /// Integer BT.601-style luma: `(77 r + 150 g + 29 b) >> 8`.
    pub fn luma(r: u16, g: u16, b: u16) -> u16 {
        ((77 * r as u32 + 150 * g as u32 + 29 * b as u32) >> 8) as u16
    }

    /// Re-renders the image in another channel-count/width format:
    /// grayscale via luma, alpha filled opaque, 8-to-16-bit samples scaled
    /// by 257.
    pub fn to_format(&self, cc: u8, bpc: u8) -> BitmapImage {
        let mut out = BitmapImage::new(self.width, self.height, cc, bpc);
        let scale = |v: u16| -> u16 {
            match (self.bpc, bpc) {
                (8, 16) => v * 257,
                (16, 8) => v / 257,
                _ => v,
            }
        };
        let opaque = out.max_value() as u16;
        for y in 0..self.height {
            for x in 0..self.width {
                let (r, g, b) = match self.cc {
                    1 => {
                        let v = self.sample(x, y, 0);
                        (v, v, v)
                    }
                    _ => (self.sample(x, y, 0), self.sample(x, y, 1), self.sample(x, y, 2)),
                };
                match cc {
                    1 => out.set_sample(x, y, 0, scale(Self::luma(r, g, b))),
                    _ => {
                        out.set_sample(x, y, 0, scale(r));
                        out.set_sample(x, y, 1, scale(g));
                        out.set_sample(x, y, 2, scale(b));
                        if cc == 4 {
                            out.set_sample(x, y, 3, opaque);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_of_white_is_white() {
        assert_eq!(BitmapImage::luma(255, 255, 255), 255);
        assert_eq!(BitmapImage::luma(0, 0, 0), 0);
    }

    #[test]
    fn format_conversion_keeps_dimensions() {
        let mut img = BitmapImage::new(4, 2, 3, 8);
        img.set_sample(1, 0, 0, 10);
        img.set_sample(1, 0, 1, 20);
        img.set_sample(1, 0, 2, 30);
        let wide = img.to_format(4, 16);
        assert_eq!(wide.sample(1, 0, 0), 10 * 257);
        assert_eq!(wide.sample(1, 0, 3), 65535);
        let gray = img.to_format(1, 8);
        assert_eq!(gray.sample(1, 0, 0), BitmapImage::luma(10, 20, 30));
    }
}
