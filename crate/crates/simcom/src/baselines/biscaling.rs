//! Bidirectional precision scaling: trailing bits are truncated up to the
//! approximation budget, leading bits shared by every word in the block are
//! stored once, and the middle bits are packed. Decompression zero-fills
//! the dropped trailing bits and restores the shared leading bits.

use super::BaselineError;
use crate::codec::BLOCK_LEN;

const HEADER_LEN: usize = 6;

fn check_width(word_width: u8) -> Result<(), BaselineError> {
    match word_width {
        8 | 16 => Ok(()),
        w => Err(BaselineError::InvalidWordWidth(w)),
    }
}

fn words_of(block: &[u8; BLOCK_LEN], word_width: u8) -> Vec<u16> {
    match word_width {
        8 => block.iter().map(|&b| b as u16).collect(),
        _ => block
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
    }
}

/// Largest `t` with `2^t - 1 <= af * (2^width - 1)`.
pub fn lsb_drop_for(af: f64, word_width: u8) -> u32 {
    let max = ((1u32 << word_width) - 1) as f64;
    let mut t = 0;
    while t < word_width as u32 && ((1u64 << (t + 1)) - 1) as f64 <= af * max {
        t += 1;
    }
    t
}

pub fn biscaling_compress(
    block: &[u8; BLOCK_LEN],
    word_width: u8,
    af: f64,
) -> Result<Option<Vec<u8>>, BaselineError> {
    check_width(word_width)?;
    let width = word_width as u32;
    let words = words_of(block, word_width);

    let lsb = lsb_drop_for(af, word_width);
    let mut diff_mask = 0u16;
    for &w in &words[1..] {
        diff_mask |= w ^ words[0];
    }
    let leading = if diff_mask == 0 {
        width
    } else {
        diff_mask.leading_zeros() - (16 - width)
    };
    let identical = leading.min(width - lsb);

    let bits = width - identical - lsb;
    let shared = if identical == 0 {
        0
    } else {
        words[0] >> (width - identical)
    };

    let packed_bits = words.len() as u32 * bits;
    let total = HEADER_LEN + (packed_bits as usize).div_ceil(8);
    if total >= BLOCK_LEN {
        return Ok(None);
    }

    let mut out = Vec::with_capacity(total);
    out.push(super::TAG_BISCALING);
    out.push(u8::from(word_width == 16));
    out.push(identical as u8);
    out.push(lsb as u8);
    out.extend_from_slice(&shared.to_le_bytes());

    let mut acc = 0u32;
    let mut acc_bits = 0u32;
    for &w in &words {
        let mid = if bits == 0 {
            0
        } else {
            (w as u32 >> lsb) & ((1u32 << bits) - 1)
        };
        acc = (acc << bits) | mid;
        acc_bits += bits;
        while acc_bits >= 8 {
            out.push((acc >> (acc_bits - 8)) as u8);
            acc_bits -= 8;
        }
    }
    if acc_bits > 0 {
        out.push((acc << (8 - acc_bits)) as u8);
    }
    debug_assert_eq!(out.len(), total);
    Ok(Some(out))
}

pub fn biscaling_decompress(data: &[u8]) -> Result<[u8; BLOCK_LEN], BaselineError> {
    if data.first() != Some(&super::TAG_BISCALING) {
        return Err(BaselineError::Corrupt("missing biscaling tag".into()));
    }
    if data.len() < HEADER_LEN {
        return Err(BaselineError::Corrupt("truncated header".into()));
    }
    let word_width: u8 = if data[1] != 0 { 16 } else { 8 };
    let width = word_width as u32;
    let identical = data[2] as u32;
    let lsb = data[3] as u32;
    if identical + lsb > width {
        return Err(BaselineError::Corrupt("bit counts exceed word width".into()));
    }
    let shared = u16::from_le_bytes([data[4], data[5]]) as u32;
    let bits = width - identical - lsb;
    let n = BLOCK_LEN / (word_width as usize / 8);

    let payload = &data[HEADER_LEN..];
    if payload.len() != (n * bits as usize).div_ceil(8) {
        return Err(BaselineError::Corrupt("payload length mismatch".into()));
    }

    let mut out = [0u8; BLOCK_LEN];
    let mut pos = 0u32;
    for i in 0..n {
        let mut mid = 0u32;
        for _ in 0..bits {
            let byte = payload[(pos / 8) as usize];
            mid = (mid << 1) | ((byte >> (7 - pos % 8)) & 1) as u32;
            pos += 1;
        }
        let value = if identical == 0 {
            mid << lsb
        } else {
            (shared << (width - identical)) | (mid << lsb)
        };
        match word_width {
            8 => out[i] = value as u8,
            _ => out[i * 2..i * 2 + 2].copy_from_slice(&(value as u16).to_le_bytes()),
        }
    }
    Ok(out)
}
