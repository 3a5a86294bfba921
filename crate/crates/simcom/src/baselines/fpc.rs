//! Frequent-pattern compression over 32-bit words with the eight classic
//! 3-bit-prefix pattern classes, extended with byte-granularity relaxation:
//! a pattern matches when some value it can represent stays within
//! `af * 255` of every byte of the word. Decompression reproduces the
//! relaxed values exactly, so af = 0 degenerates to exact FPC.

use super::BaselineError;
use crate::codec::BLOCK_LEN;

const WORDS: usize = 16;

const PREFIX_ZERO: u8 = 0;
const PREFIX_NIBBLE_SX: u8 = 1;
const PREFIX_BYTE_SX: u8 = 2;
const PREFIX_HALF_SX: u8 = 3;
const PREFIX_HALF_HIGH: u8 = 4;
const PREFIX_TWO_HALF_BYTES: u8 = 5;
const PREFIX_REPEATED_BYTE: u8 = 6;
const PREFIX_UNCOMPRESSED: u8 = 7;

/// Payload bits per prefix (the zero prefix carries a 3-bit run length).
const DATA_BITS: [u32; 8] = [3, 4, 8, 16, 16, 16, 8, 32];

struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { bytes: Vec::new(), used: 0 }
    }

    fn push(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            let bit = (value >> i) & 1;
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let last = self.bytes.last_mut().unwrap();
            *last |= (bit as u8) << (7 - self.used % 8);
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn take(&mut self, bits: u32) -> Result<u32, BaselineError> {
        let mut v = 0u32;
        for _ in 0..bits {
            let byte = self
                .bytes
                .get((self.pos / 8) as usize)
                .ok_or_else(|| BaselineError::Corrupt("truncated bit stream".into()))?;
            v = (v << 1) | ((byte >> (7 - self.pos % 8)) & 1) as u32;
            self.pos += 1;
        }
        Ok(v)
    }
}

fn bytes_of(w: u32) -> [u8; 4] {
    w.to_le_bytes()
}

fn max4(a: u32, b: u32, c: u32, d: u32) -> u32 {
    a.max(b).max(c).max(d)
}

fn dist(a: u8, b: u8) -> u32 {
    (a as i32 - b as i32).unsigned_abs()
}

/// Best representable value and its max per-byte distance for a pattern
/// whose byte 0 ranges over a clamped interval and whose remaining bytes
/// are a sign fill. Used by the nibble and byte sign-extension classes.
fn fit_sign_extended(b: [u8; 4], pos_max: u8, neg_min: u8) -> (u32, u32) {
    let pb = b[0].min(pos_max);
    let pos_delta = max4(dist(b[0], pb), b[1] as u32, b[2] as u32, b[3] as u32);
    let nb = b[0].max(neg_min);
    let neg_delta = max4(
        dist(b[0], nb),
        255 - b[1] as u32,
        255 - b[2] as u32,
        255 - b[3] as u32,
    );
    if pos_delta <= neg_delta {
        (pb as u32, pos_delta)
    } else {
        (u32::from_le_bytes([nb, 0xff, 0xff, 0xff]), neg_delta)
    }
}

fn fit_half_sign_extended(b: [u8; 4]) -> (u32, u32) {
    let ph = b[1].min(0x7f);
    let pos_delta = max4(0, dist(b[1], ph), b[2] as u32, b[3] as u32);
    let nh = b[1].max(0x80);
    let neg_delta = max4(0, dist(b[1], nh), 255 - b[2] as u32, 255 - b[3] as u32);
    if pos_delta <= neg_delta {
        (u32::from_le_bytes([b[0], ph, 0, 0]), pos_delta)
    } else {
        (u32::from_le_bytes([b[0], nh, 0xff, 0xff]), neg_delta)
    }
}

/// Each 16-bit half is a sign-extended byte: fit the two halves
/// independently.
fn fit_two_half_bytes(b: [u8; 4]) -> (u32, u32) {
    let fit_half = |lo: u8, hi: u8| -> (u8, u8, u32) {
        let p = lo.min(0x7f);
        let pos = dist(lo, p).max(hi as u32);
        let n = lo.max(0x80);
        let neg = dist(lo, n).max(255 - hi as u32);
        if pos <= neg {
            (p, 0x00, pos)
        } else {
            (n, 0xff, neg)
        }
    };
    let (l0, l1, dl) = fit_half(b[0], b[1]);
    let (h0, h1, dh) = fit_half(b[2], b[3]);
    (u32::from_le_bytes([l0, l1, h0, h1]), dl.max(dh))
}

fn fit_repeated_byte(b: [u8; 4]) -> (u32, u32) {
    let lo = *b.iter().min().unwrap() as u32;
    let hi = *b.iter().max().unwrap() as u32;
    let mid = ((lo + hi) / 2) as u8;
    let delta = b.iter().map(|&x| dist(x, mid)).max().unwrap();
    (u32::from_le_bytes([mid; 4]), delta)
}

/// Classifies one word: the cheapest admissible pattern, its payload bits,
/// and the value it reconstructs to. Ties between equal-cost patterns go to
/// the lower prefix.
fn classify(word: u32, tolerance: f64) -> (u8, u32) {
    let b = bytes_of(word);
    let zero_delta = max4(b[0] as u32, b[1] as u32, b[2] as u32, b[3] as u32);
    if zero_delta as f64 <= tolerance {
        return (PREFIX_ZERO, 0);
    }
    let candidates = [
        (PREFIX_NIBBLE_SX, fit_sign_extended(b, 0x07, 0xf8)),
        (PREFIX_BYTE_SX, fit_sign_extended(b, 0x7f, 0x80)),
        (PREFIX_REPEATED_BYTE, fit_repeated_byte(b)),
        (PREFIX_HALF_SX, fit_half_sign_extended(b)),
        (PREFIX_HALF_HIGH, (word & 0xffff_0000, b[0].max(b[1]) as u32)),
        (PREFIX_TWO_HALF_BYTES, fit_two_half_bytes(b)),
    ];
    let mut best = (PREFIX_UNCOMPRESSED, word);
    let mut best_key = (3 + DATA_BITS[PREFIX_UNCOMPRESSED as usize], PREFIX_UNCOMPRESSED);
    for (prefix, (value, delta)) in candidates {
        if delta as f64 <= tolerance {
            let key = (3 + DATA_BITS[prefix as usize], prefix);
            if key < best_key {
                best = (prefix, value);
                best_key = key;
            }
        }
    }
    best
}

fn payload_of(prefix: u8, value: u32) -> u32 {
    let b = bytes_of(value);
    match prefix {
        PREFIX_NIBBLE_SX | PREFIX_BYTE_SX | PREFIX_REPEATED_BYTE => b[0] as u32,
        PREFIX_HALF_SX => value & 0xffff,
        PREFIX_HALF_HIGH => value >> 16,
        // The sign-carrying byte of each halfword.
        PREFIX_TWO_HALF_BYTES => (b[0] as u32) | ((b[2] as u32) << 8),
        _ => value,
    }
}

fn value_of(prefix: u8, payload: u32) -> u32 {
    match prefix {
        PREFIX_NIBBLE_SX => {
            let fill = if payload & 0x8 != 0 { 0xffff_fff0 } else { 0 };
            fill | (payload & 0xf)
        }
        PREFIX_BYTE_SX => {
            let fill = if payload & 0x80 != 0 { 0xffff_ff00 } else { 0 };
            fill | (payload & 0xff)
        }
        PREFIX_HALF_SX => {
            let fill = if payload & 0x8000 != 0 { 0xffff_0000 } else { 0 };
            fill | (payload & 0xffff)
        }
        PREFIX_HALF_HIGH => payload << 16,
        PREFIX_TWO_HALF_BYTES => {
            let lo = value_of(PREFIX_BYTE_SX, payload & 0xff) & 0xffff;
            let hi = value_of(PREFIX_BYTE_SX, (payload >> 8) & 0xff) & 0xffff;
            (hi << 16) | lo
        }
        PREFIX_REPEATED_BYTE => u32::from_le_bytes([payload as u8; 4]),
        _ => payload,
    }
}

/// Compresses a 64-byte block; `None` when the tagged serialization would
/// not be smaller than the raw block.
pub fn fpc_compress(block: &[u8; BLOCK_LEN], af: f64) -> Option<Vec<u8>> {
    let tolerance = af * 255.0;
    let mut writer = BitWriter::new();
    let mut zero_run = 0u32;
    let flush_run = |writer: &mut BitWriter, run: &mut u32| {
        while *run > 0 {
            let chunk = (*run).min(8);
            writer.push(PREFIX_ZERO as u32, 3);
            writer.push(chunk - 1, 3);
            *run -= chunk;
        }
    };
    for chunk in block.chunks_exact(4) {
        let word = u32::from_le_bytes(chunk.try_into().unwrap());
        let (prefix, value) = classify(word, tolerance);
        if prefix == PREFIX_ZERO {
            zero_run += 1;
            continue;
        }
        flush_run(&mut writer, &mut zero_run);
        writer.push(prefix as u32, 3);
        writer.push(payload_of(prefix, value), DATA_BITS[prefix as usize]);
    }
    flush_run(&mut writer, &mut zero_run);

    let mut out = Vec::with_capacity(1 + writer.bytes.len());
    out.push(super::TAG_FPC);
    out.extend_from_slice(&writer.bytes);
    (out.len() < BLOCK_LEN).then_some(out)
}

pub fn fpc_decompress(data: &[u8]) -> Result<[u8; BLOCK_LEN], BaselineError> {
    if data.first() != Some(&super::TAG_FPC) {
        return Err(BaselineError::Corrupt("missing fpc tag".into()));
    }
    let mut reader = BitReader::new(&data[1..]);
    let mut out = [0u8; BLOCK_LEN];
    let mut filled = 0usize;
    while filled < WORDS {
        let prefix = reader.take(3)? as u8;
        let payload = reader.take(DATA_BITS[prefix as usize])?;
        if prefix == PREFIX_ZERO {
            let count = payload as usize + 1;
            if filled + count > WORDS {
                return Err(BaselineError::Corrupt("zero run overruns block".into()));
            }
            filled += count;
            continue;
        }
        let value = value_of(prefix, payload);
        out[filled * 4..filled * 4 + 4].copy_from_slice(&value.to_le_bytes());
        filled += 1;
    }
    Ok(out)
}
