//! Reference block compressors used for comparison: frequent-pattern
//! compression, base-delta encoding, and bidirectional precision scaling.
//! Each serialized form starts with a one-byte scheme tag.

use thiserror::Error;

mod bdi;
mod biscaling;
mod fpc;

pub use bdi::{bdi_compress, bdi_decompress};
pub use biscaling::{biscaling_compress, biscaling_decompress};
pub use fpc::{fpc_compress, fpc_decompress};

pub const TAG_FPC: u8 = 0x01;
pub const TAG_BDI: u8 = 0x02;
pub const TAG_BISCALING: u8 = 0x03;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("unsupported word width {0}, expected 8 or 16")]
    InvalidWordWidth(u8),
    #[error("corrupt baseline block: {0}")]
    Corrupt(String),
}

/// Decodes any tagged baseline serialization back to the 64-byte payload.
pub fn decode(data: &[u8]) -> Result<[u8; crate::codec::BLOCK_LEN], BaselineError> {
    match data.first() {
        Some(&TAG_FPC) => fpc_decompress(data),
        Some(&TAG_BDI) => bdi_decompress(data),
        Some(&TAG_BISCALING) => biscaling_decompress(data),
        Some(&tag) => Err(BaselineError::Corrupt(format!("unknown scheme tag {tag:#04x}"))),
        None => Err(BaselineError::Corrupt("empty input".into())),
    }
}
