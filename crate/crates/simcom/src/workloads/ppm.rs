//! Binary netpbm input and output: P5 graymaps and P6 pixmaps with maxval
//! 255 or 65535. 16-bit samples are big-endian on disk per the format and
//! converted to the crate's little-endian layout on load.

use std::io::Write;
use std::path::Path;

use super::{BitmapImage, WorkloadError};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> WorkloadError {
        WorkloadError::Parse {
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn take(&mut self) -> Option<u8> {
        let b = self.bytes.get(self.pos).copied();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Skips whitespace and `#` comment lines between header fields.
    fn skip_separators(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.pos += 1;
                }
                Some(b'#') => {
                    while let Some(b) = self.take() {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn read_int(&mut self) -> Result<u32, WorkloadError> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(b) = self.peek() {
            if !b.is_ascii_digit() {
                break;
            }
            value = value * 10 + (b - b'0') as u64;
            if value > u32::MAX as u64 {
                return Err(self.err("header value overflows"));
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        Ok(value as u32)
    }
}

/// Parses a binary PPM (P6) or PGM (P5) byte stream.
pub fn parse_ppm(bytes: &[u8]) -> Result<BitmapImage, WorkloadError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = [cur.take(), cur.take()];
    let cc = match magic {
        [Some(b'P'), Some(b'5')] => 1u8,
        [Some(b'P'), Some(b'6')] => 3u8,
        _ => {
            return Err(WorkloadError::Parse {
                offset: 0,
                msg: "expected P5 or P6 magic".into(),
            })
        }
    };
    let width = cur.read_int()?;
    let height = cur.read_int()?;
    let maxval = cur.read_int()?;
    let bpc = match maxval {
        255 => 8u8,
        65535 => 16u8,
        other => return Err(cur.err(format!("unsupported maxval {other}"))),
    };
    match cur.take() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(cur.err("expected single whitespace after maxval")),
    }

    let mut img = BitmapImage::new(width, height, cc, bpc);
    let needed = img.data.len();
    let rest = &bytes[cur.pos..];
    if rest.len() < needed {
        return Err(WorkloadError::Parse {
            offset: bytes.len(),
            msg: format!("truncated pixel data: {} of {needed} bytes", rest.len()),
        });
    }
    match bpc {
        8 => img.data.copy_from_slice(&rest[..needed]),
        _ => {
            for (dst, src) in img.data.chunks_exact_mut(2).zip(rest.chunks_exact(2)) {
                let v = u16::from_be_bytes([src[0], src[1]]);
                dst.copy_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(img)
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<BitmapImage, WorkloadError> {
    parse_ppm(&std::fs::read(path)?)
}

/// Serializes an image as binary P5 (one channel) or P6 (three channels).
pub fn write_ppm(img: &BitmapImage) -> Result<Vec<u8>, WorkloadError> {
    let magic = match img.cc {
        1 => "P5",
        3 => "P6",
        cc => {
            return Err(WorkloadError::UnsupportedFormat(format!(
                "{cc}-channel images have no netpbm form"
            )))
        }
    };
    let mut out = Vec::with_capacity(img.data.len() + 32);
    write!(out, "{magic}\n{} {}\n{}\n", img.width, img.height, img.max_value())?;
    match img.bpc {
        8 => out.extend_from_slice(&img.data),
        _ => {
            for pair in img.data.chunks_exact(2) {
                let v = u16::from_le_bytes([pair[0], pair[1]]);
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub fn save_ppm(img: &BitmapImage, path: impl AsRef<Path>) -> Result<(), WorkloadError> {
    Ok(std::fs::write(path, write_ppm(img)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_p6_fixture() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
        let img = parse_ppm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.cc, img.bpc), (2, 2, 3, 8));
        assert_eq!(img.sample(1, 1, 2), 12);
    }

    #[test]
    fn sixteen_bit_p5_is_big_endian_on_disk() {
        let mut bytes = b"P5 1 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0x12, 0x34]);
        let img = parse_ppm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.cc, img.bpc), (1, 1, 1, 16));
        assert_eq!(img.sample(0, 0, 0), 0x1234);
        assert_eq!(img.data, vec![0x34, 0x12]);
    }

    #[test]
    fn comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 8]);
        let img = parse_ppm(&bytes).unwrap();
        assert_eq!(img.sample(0, 0, 0), 9);
    }

    #[test]
    fn roundtrip_is_byte_identical_for_canonical_files() {
        for (magic, cc, maxval, px) in [
            ("P5", 1, 255, 6usize),
            ("P6", 3, 255, 18),
            ("P5", 1, 65535, 12),
            ("P6", 3, 65535, 36),
        ] {
            let mut bytes = format!("{magic}\n3 2\n{maxval}\n").into_bytes();
            bytes.extend((0..px).map(|i| (i * 37 + 5) as u8));
            let img = parse_ppm(&bytes).unwrap();
            assert_eq!(img.cc, cc);
            assert_eq!(write_ppm(&img).unwrap(), bytes);
        }
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let err = parse_ppm(b"P7 1 1 255 ").unwrap_err();
        assert!(matches!(err, WorkloadError::Parse { offset: 0, .. }));

        let err = parse_ppm(b"P5 2 2 300 ").unwrap_err();
        assert!(matches!(err, WorkloadError::Parse { offset, .. } if offset > 0));

        let err = parse_ppm(b"P5 4 4 255\n12").unwrap_err();
        match err {
            WorkloadError::Parse { msg, .. } => assert!(msg.contains("truncated")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
