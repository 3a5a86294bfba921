//! Similarity-aware block compression.
//!
//! A 64-byte write block is partitioned into pixel-sized words, consecutive
//! words within the approximation budget of a base word collapse into
//! (base, run) pairs, and six channel-count/channel-width modes compete for
//! the smallest mean difference. The serialized form is bit-exact and
//! platform independent.

use thiserror::Error;

/// Size of one write block in bytes.
pub const BLOCK_LEN: usize = 64;

/// Version of the serialized block layout produced by [`serialize`].
pub const BLOCK_FORMAT_VERSION: u32 = 1;

/// Errors produced by the block codec.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("channel count mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("base count {0} outside 1..=32")]
    InvalidBaseCount(usize),
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("corrupt block: {0}")]
    Corrupt(String),
}

/// A compression mode: channel count and bits per channel.
///
/// Exactly six modes are legal. The 3-bit ids 6 and 7 are reserved and are
/// rejected during deserialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode {
    pub cc: u8,
    pub bpc: u8,
}

/// The six legal modes in id order.
pub const MODES: [Mode; 6] = [
    Mode { cc: 1, bpc: 8 },
    Mode { cc: 3, bpc: 8 },
    Mode { cc: 4, bpc: 8 },
    Mode { cc: 1, bpc: 16 },
    Mode { cc: 3, bpc: 16 },
    Mode { cc: 4, bpc: 16 },
];

impl Mode {
    pub fn new(cc: u8, bpc: u8) -> Option<Mode> {
        let m = Mode { cc, bpc };
        MODES.contains(&m).then_some(m)
    }

    /// 3-bit mode id (position in [`MODES`]).
    pub fn id(self) -> u8 {
        MODES.iter().position(|&m| m == self).expect("legal mode") as u8
    }

    pub fn from_id(id: u8) -> Option<Mode> {
        MODES.get(id as usize).copied()
    }

    /// Word size in bytes: `cc * bpc / 8`.
    pub fn word_bytes(self) -> usize {
        self.cc as usize * (self.bpc as usize / 8)
    }

    /// Maximum channel value: `2^bpc - 1`.
    pub fn max_value(self) -> u32 {
        (1u32 << self.bpc) - 1
    }

    /// Display label matching the channel-count/byte-count convention,
    /// e.g. "3C1B" for three 8-bit channels.
    pub fn label(self) -> &'static str {
        match self.id() {
            0 => "1C1B",
            1 => "3C1B",
            2 => "4C1B",
            3 => "1C2B",
            4 => "3C2B",
            _ => "4C2B",
        }
    }
}

/// A partitioned word of up to four channel samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelWord {
    channels: [u16; 4],
    len: u8,
}

impl PixelWord {
    pub fn new(channels: &[u16]) -> PixelWord {
        assert!(!channels.is_empty() && channels.len() <= 4);
        let mut buf = [0u16; 4];
        buf[..channels.len()].copy_from_slice(channels);
        PixelWord {
            channels: buf,
            len: channels.len() as u8,
        }
    }

    /// Decodes channel samples from raw bytes. 16-bit channels are
    /// little-endian.
    pub fn from_bytes(bytes: &[u8], bpc: u8) -> PixelWord {
        match bpc {
            8 => {
                let samples: Vec<u16> = bytes.iter().map(|&b| b as u16).collect();
                PixelWord::new(&samples)
            }
            16 => {
                assert_eq!(bytes.len() % 2, 0);
                let samples: Vec<u16> = bytes
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect();
                PixelWord::new(&samples)
            }
            _ => panic!("unsupported bits per channel: {bpc}"),
        }
    }

    pub fn channels(&self) -> &[u16] {
        &self.channels[..self.len as usize]
    }
}

/// Normalized difference between two words: the largest per-channel
/// absolute difference divided by the mode's maximum channel value.
///
/// Words may carry fewer channels than the mode (remainder comparison), but
/// their channel counts must match each other.
pub fn norm_diff(p: &PixelWord, q: &PixelWord, mode: Mode) -> Result<f64, CodecError> {
    let (a, b) = (p.channels(), q.channels());
    if a.len() != b.len() {
        return Err(CodecError::ChannelMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() || a.len() > mode.cc as usize {
        return Err(CodecError::ChannelMismatch {
            left: a.len(),
            right: mode.cc as usize,
        });
    }
    let max_delta = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs())
        .max()
        .unwrap();
    Ok(max_delta as f64 / mode.max_value() as f64)
}

/// Largest per-channel absolute difference between two equal-length byte
/// windows, decoded at the given channel width.
fn channel_delta_max(a: &[u8], b: &[u8], bpc: u8) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    match bpc {
        8 => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs())
            .max()
            .unwrap_or(0),
        _ => a
            .chunks_exact(2)
            .zip(b.chunks_exact(2))
            .map(|(x, y)| {
                let xv = u16::from_le_bytes([x[0], x[1]]) as i32;
                let yv = u16::from_le_bytes([y[0], y[1]]) as i32;
                (xv - yv).unsigned_abs()
            })
            .max()
            .unwrap_or(0),
    }
}

/// Splits a block into full words plus the trailing remainder bytes.
///
/// Concatenating the words (little-endian channels) followed by the
/// remainder reproduces the input exactly.
pub fn partition(block: &[u8; BLOCK_LEN], mode: Mode) -> (Vec<PixelWord>, Vec<u8>) {
    let w = mode.word_bytes();
    let words = block
        .chunks_exact(w)
        .map(|c| PixelWord::from_bytes(c, mode.bpc))
        .collect();
    let remainder = block[BLOCK_LEN - BLOCK_LEN % w..].to_vec();
    (words, remainder)
}

/// Mean normalized difference of a compression pass, kept as an exact
/// fraction so mode selection compares and ties deterministically.
#[derive(Debug, Clone, Copy)]
pub struct MeanDiff {
    num: u64,
    den: u64,
}

impl MeanDiff {
    fn new(delta_sum: u64, word_count: usize, max_value: u32) -> MeanDiff {
        MeanDiff {
            num: delta_sum,
            den: word_count as u64 * max_value as u64,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for MeanDiff {
    fn eq(&self, other: &Self) -> bool {
        self.num as u128 * other.den as u128 == other.num as u128 * self.den as u128
    }
}

impl Eq for MeanDiff {}

impl PartialOrd for MeanDiff {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeanDiff {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// One base word with the count of additional similar words that follow it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseRunPair {
    pub base: Vec<u8>,
    pub run: u8,
}

/// Compressed form of one block: a mode, up to 32 base/run pairs, and an
/// optionally stored remainder. The remainder bit of the last pair is
/// implied by `remainder.is_some()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub mode: Mode,
    pub pairs: Vec<BaseRunPair>,
    pub remainder: Option<Vec<u8>>,
}

impl CompressedBlock {
    pub fn base_count(&self) -> usize {
        self.pairs.len()
    }

    /// Serialized length: 1 metadata byte, `word + 1` bytes per pair, plus
    /// remainder bytes when stored.
    pub fn serialized_len(&self) -> usize {
        1 + self.pairs.len() * (self.mode.word_bytes() + 1)
            + self.remainder.as_ref().map_or(0, Vec::len)
    }
}

/// Sideband flags stored outside the block payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SidebandBits {
    pub compressible: bool,
    pub approximable: bool,
}

/// Compresses a 64-byte block in a fixed mode. Returns `None` when the
/// block does not fit (more than 32 pairs, or no size win); the mean
/// difference is reported either way so the adaptive selector can rank the
/// mode.
pub fn compress_with_mode(
    block: &[u8; BLOCK_LEN],
    mode: Mode,
    af: f64,
) -> (Option<CompressedBlock>, MeanDiff) {
    compress_frame(block, mode, af).expect("64-byte frame is always valid")
}

/// Frame-length-generic compression core. `data` must be 1..=64 bytes, hold
/// at least one full word, and its remainder must consist of whole channels.
pub fn compress_frame(
    data: &[u8],
    mode: Mode,
    af: f64,
) -> Result<(Option<CompressedBlock>, MeanDiff), CodecError> {
    assert!((0.0..=1.0).contains(&af), "approximation factor in [0, 1]");
    let w = mode.word_bytes();
    if data.is_empty() || data.len() > BLOCK_LEN {
        return Err(CodecError::InvalidFrame(format!(
            "frame length {} outside 1..=64",
            data.len()
        )));
    }
    if data.len() < w {
        return Err(CodecError::InvalidFrame(format!(
            "frame length {} below word size {w}",
            data.len()
        )));
    }
    let rem_len = data.len() % w;
    if !rem_len.is_multiple_of(mode.bpc as usize / 8) {
        return Err(CodecError::InvalidFrame(format!(
            "remainder of {rem_len} bytes splits a {}-bit channel",
            mode.bpc
        )));
    }

    let word_count = data.len() / w;
    let max_value = mode.max_value() as f64;

    // Greedy pass: each word is compared against the current base; a word
    // past the budget becomes the next base. The differences double as the
    // selector's mean-difference samples.
    let mut pairs: Vec<(usize, u8)> = Vec::new();
    let mut delta_sum: u64 = 0;
    let mut base_off = 0usize;
    let mut run = 0u8;
    for i in 1..word_count {
        let off = i * w;
        let delta = channel_delta_max(&data[base_off..base_off + w], &data[off..off + w], mode.bpc);
        delta_sum += delta as u64;
        if delta as f64 / max_value <= af {
            run += 1;
        } else {
            pairs.push((base_off, run));
            base_off = off;
            run = 0;
        }
    }
    pairs.push((base_off, run));

    let mean = MeanDiff::new(delta_sum, word_count, mode.max_value());

    // The remainder is dropped when its channels sit within the budget of
    // the last base's leading channels; otherwise it is stored verbatim.
    let remainder = if rem_len > 0 {
        let rem = &data[data.len() - rem_len..];
        let last_base = &data[base_off..base_off + rem_len];
        let delta = channel_delta_max(rem, last_base, mode.bpc);
        (delta as f64 / max_value > af).then(|| rem.to_vec())
    } else {
        None
    };

    if pairs.len() > 32 {
        return Ok((None, mean));
    }
    let serialized = 1 + pairs.len() * (w + 1) + remainder.as_ref().map_or(0, Vec::len);
    if serialized >= data.len() {
        return Ok((None, mean));
    }

    let block = CompressedBlock {
        mode,
        pairs: pairs
            .into_iter()
            .map(|(off, run)| BaseRunPair {
                base: data[off..off + w].to_vec(),
                run,
            })
            .collect(),
        remainder,
    };
    Ok((Some(block), mean))
}

/// Runs all six modes and keeps the candidate with the smallest mean
/// difference; ties fall to the smaller serialized form, then to the lower
/// mode id. Returns `None` when the winning candidate does not compress.
pub fn compress_adaptive(block: &[u8; BLOCK_LEN], af: f64) -> Option<CompressedBlock> {
    let mut best: Option<(MeanDiff, usize, u8, Option<CompressedBlock>)> = None;
    for mode in MODES {
        let (candidate, mean) = compress_with_mode(block, mode, af);
        let size = candidate.as_ref().map_or(BLOCK_LEN, CompressedBlock::serialized_len);
        let better = match &best {
            None => true,
            Some((bm, bs, bi, _)) => (mean, size, mode.id()) < (*bm, *bs, *bi),
        };
        if better {
            best = Some((mean, size, mode.id(), candidate));
        }
    }
    best.expect("six modes evaluated").3
}

/// Greedy group sizes over a block's full words: each group holds one base
/// plus every following word within the budget of that base.
pub fn group_sizes(block: &[u8; BLOCK_LEN], mode: Mode, af: f64) -> Vec<usize> {
    let w = mode.word_bytes();
    let max_value = mode.max_value() as f64;
    let word_count = BLOCK_LEN / w;
    let mut sizes = Vec::new();
    let mut base_off = 0usize;
    let mut size = 1usize;
    for i in 1..word_count {
        let off = i * w;
        let delta = channel_delta_max(&block[base_off..base_off + w], &block[off..off + w], mode.bpc);
        if delta as f64 / max_value <= af {
            size += 1;
        } else {
            sizes.push(size);
            base_off = off;
            size = 1;
        }
    }
    sizes.push(size);
    sizes
}

/// Serializes a compressed block.
///
/// Byte 0 packs the mode id into the top 3 bits and `base count - 1` into
/// the low 5. Each pair contributes its base bytes followed by one run
/// byte; the run byte's MSB is set only on the last pair when remainder
/// bytes follow. The encoding is bit-exact across platforms.
pub fn serialize(block: &CompressedBlock) -> Result<Vec<u8>, CodecError> {
    let n = block.pairs.len();
    if n == 0 || n > 32 {
        return Err(CodecError::InvalidBaseCount(n));
    }
    let w = block.mode.word_bytes();
    let mut out = Vec::with_capacity(block.serialized_len());
    out.push((block.mode.id() << 5) | (n as u8 - 1));
    for (i, pair) in block.pairs.iter().enumerate() {
        if pair.base.len() != w {
            return Err(CodecError::InvalidPair(format!(
                "base of {} bytes in a {w}-byte-word mode",
                pair.base.len()
            )));
        }
        if pair.run > 0x7f {
            return Err(CodecError::InvalidPair(format!("run {} above 127", pair.run)));
        }
        out.extend_from_slice(&pair.base);
        let mut run_byte = pair.run;
        if i == n - 1 && block.remainder.is_some() {
            run_byte |= 0x80;
        }
        out.push(run_byte);
    }
    if let Some(rem) = &block.remainder {
        out.extend_from_slice(rem);
    }
    Ok(out)
}

/// Parses a serialized block back, validating it against 64-byte geometry.
pub fn deserialize(data: &[u8]) -> Result<CompressedBlock, CodecError> {
    deserialize_frame(data, BLOCK_LEN)
}

/// Frame-length-generic parser for serialized blocks.
pub fn deserialize_frame(data: &[u8], frame_len: usize) -> Result<CompressedBlock, CodecError> {
    let meta = *data
        .first()
        .ok_or_else(|| CodecError::Corrupt("empty input".into()))?;
    let mode = Mode::from_id(meta >> 5)
        .ok_or_else(|| CodecError::Corrupt(format!("reserved mode id {}", meta >> 5)))?;
    let n = (meta & 0x1f) as usize + 1;
    let w = mode.word_bytes();
    if data.len() < 1 + n * (w + 1) {
        return Err(CodecError::Corrupt(format!(
            "truncated input: {} bytes for {n} pairs of {}-byte words",
            data.len(),
            w
        )));
    }

    let mut pairs = Vec::with_capacity(n);
    let mut covered = 0usize;
    let mut has_remainder = false;
    for i in 0..n {
        let off = 1 + i * (w + 1);
        let run_byte = data[off + w];
        if run_byte & 0x80 != 0 {
            if i != n - 1 {
                return Err(CodecError::Corrupt(
                    "remainder bit set on a non-final pair".into(),
                ));
            }
            has_remainder = true;
        }
        let run = run_byte & 0x7f;
        covered += run as usize + 1;
        pairs.push(BaseRunPair {
            base: data[off..off + w].to_vec(),
            run,
        });
    }

    if covered != frame_len / w {
        return Err(CodecError::Corrupt(format!(
            "runs cover {covered} words, geometry needs {}",
            frame_len / w
        )));
    }

    let rem_len = frame_len % w;
    let body_end = 1 + n * (w + 1);
    let remainder = if has_remainder {
        if rem_len == 0 {
            return Err(CodecError::Corrupt(
                "remainder bit set in a mode with no remainder".into(),
            ));
        }
        if data.len() != body_end + rem_len {
            return Err(CodecError::Corrupt(format!(
                "expected {rem_len} remainder bytes, found {}",
                data.len() - body_end
            )));
        }
        Some(data[body_end..].to_vec())
    } else {
        if data.len() != body_end {
            return Err(CodecError::Corrupt(format!(
                "{} trailing bytes after the last pair",
                data.len() - body_end
            )));
        }
        None
    };

    Ok(CompressedBlock {
        mode,
        pairs,
        remainder,
    })
}

/// Reconstructs the 64-byte payload for a block with the given sideband
/// bits. Incompressible data (compressible = 0) bypasses decoding.
pub fn decompress(data: &[u8], sideband: SidebandBits) -> Result<[u8; BLOCK_LEN], CodecError> {
    if !sideband.compressible {
        let raw: [u8; BLOCK_LEN] = data
            .try_into()
            .map_err(|_| CodecError::Corrupt(format!("raw block of {} bytes", data.len())))?;
        return Ok(raw);
    }
    if !sideband.approximable {
        return Err(CodecError::Corrupt(
            "precise-compressed data requires the precise codec".into(),
        ));
    }
    let out = decompress_frame(data, BLOCK_LEN)?;
    Ok(out.try_into().expect("frame decode yields 64 bytes"))
}

/// Frame-length-generic reconstruction: each base is written `run + 1`
/// times; trailing bytes come from the stored remainder or, when the
/// remainder was dropped, from the leading bytes of the last base.
pub fn decompress_frame(data: &[u8], frame_len: usize) -> Result<Vec<u8>, CodecError> {
    let block = deserialize_frame(data, frame_len)?;
    let w = block.mode.word_bytes();
    let mut out = Vec::with_capacity(frame_len);
    for pair in &block.pairs {
        for _ in 0..=pair.run {
            out.extend_from_slice(&pair.base);
        }
    }
    let rem_len = frame_len % w;
    if rem_len > 0 {
        match &block.remainder {
            Some(rem) => out.extend_from_slice(rem),
            None => {
                let last = &block.pairs.last().expect("at least one pair").base;
                out.extend_from_slice(&last[..rem_len]);
            }
        }
    }
    debug_assert_eq!(out.len(), frame_len);
    Ok(out)
}
