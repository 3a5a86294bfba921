//! Base-delta encoding: the block is cut into equal words, the first word
//! becomes the base, and every word is stored as a small signed delta.
//! Approximation clamps an overflowing delta to the representable range
//! when the clamping error stays within `af * (2^(8 * base_size) - 1)`, so
//! af = 0 is exact base-delta compression.

use super::BaselineError;
use crate::codec::BLOCK_LEN;

/// (base bytes, delta bytes) encodings in id order; sizes are all distinct.
const COMBOS: [(usize, usize); 6] = [(8, 1), (8, 2), (8, 4), (4, 1), (4, 2), (2, 1)];

fn read_word(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(buf)
}

fn word_max(base_size: usize) -> f64 {
    if base_size == 8 {
        u64::MAX as f64
    } else {
        ((1u64 << (8 * base_size)) - 1) as f64
    }
}

fn try_combo(block: &[u8; BLOCK_LEN], combo: usize, af: f64) -> Option<Vec<u8>> {
    let (bs, ds) = COMBOS[combo];
    let words: Vec<u64> = block.chunks_exact(bs).map(read_word).collect();
    let base = words[0];
    let lo = -(1i128 << (8 * ds - 1));
    let hi = (1i128 << (8 * ds - 1)) - 1;
    let budget = af * word_max(bs);

    let mut deltas = Vec::with_capacity(words.len());
    for &w in &words {
        let delta = w as i128 - base as i128;
        let clamped = delta.clamp(lo, hi);
        let err = (delta - clamped).unsigned_abs();
        if err != 0 && err as f64 > budget {
            return None;
        }
        deltas.push(clamped);
    }

    let mut out = Vec::with_capacity(2 + bs + words.len() * ds);
    out.push(super::TAG_BDI);
    out.push(combo as u8);
    out.extend_from_slice(&base.to_le_bytes()[..bs]);
    for d in deltas {
        out.extend_from_slice(&d.to_le_bytes()[..ds]);
    }
    Some(out)
}

/// Tries every encoding and keeps the smallest successful one.
pub fn bdi_compress(block: &[u8; BLOCK_LEN], af: f64) -> Option<Vec<u8>> {
    (0..COMBOS.len())
        .filter_map(|c| try_combo(block, c, af))
        .min_by_key(Vec::len)
}

pub fn bdi_decompress(data: &[u8]) -> Result<[u8; BLOCK_LEN], BaselineError> {
    if data.first() != Some(&super::TAG_BDI) {
        return Err(BaselineError::Corrupt("missing bdi tag".into()));
    }
    let combo = *data
        .get(1)
        .ok_or_else(|| BaselineError::Corrupt("missing encoding id".into()))? as usize;
    let (bs, ds) = *COMBOS
        .get(combo)
        .ok_or_else(|| BaselineError::Corrupt(format!("bad encoding id {combo}")))?;
    let n = BLOCK_LEN / bs;
    if data.len() != 2 + bs + n * ds {
        return Err(BaselineError::Corrupt(format!(
            "expected {} bytes, found {}",
            2 + bs + n * ds,
            data.len()
        )));
    }
    let base = read_word(&data[2..2 + bs]) as i128;
    let mut out = [0u8; BLOCK_LEN];
    for i in 0..n {
        let off = 2 + bs + i * ds;
        let mut buf = [0u8; 16];
        buf[..ds].copy_from_slice(&data[off..off + ds]);
        // Sign-extend the delta.
        if buf[ds - 1] & 0x80 != 0 {
            buf[ds..].fill(0xff);
        }
        let delta = i128::from_le_bytes(buf);
        let value = (base + delta) as u64;
        out[i * bs..(i + 1) * bs].copy_from_slice(&value.to_le_bytes()[..bs]);
    }
    Ok(out)
}
