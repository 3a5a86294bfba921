//! Byte-addressable NVM model with the full write path: classify against
//! the quality table, compress, Flip-N-Write encode, store, and account
//! bit-writes and 8-byte write units. Reads decode the stored form back.
//!
//! One state instance serves one scheme; sweeps run independent states.

use thiserror::Error;

use crate::baselines::{self, BaselineError};
use crate::codec::{self, CodecError, SidebandBits, BLOCK_LEN};
use crate::fnw::{self, FnwError};

/// Nanoseconds per serial 8-byte write unit.
pub const WRITE_UNIT_NS: u64 = 150;

#[derive(Debug, Error)]
pub enum MemError {
    #[error("address {addr:#x} out of bounds for {size}-byte memory")]
    OutOfBounds { addr: u64, size: usize },
    #[error("address {0:#x} is not 64-byte aligned")]
    Misaligned(u64),
    #[error("read of never-written block at {0:#x}")]
    Uninitialized(u64),
    #[error("quality table: {0}")]
    QualityTable(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Fnw(#[from] FnwError),
}

/// Compressor driving approximable writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Simcom,
    Fpc,
    Bdi,
    Biscaling,
    Raw,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Simcom,
        Scheme::Fpc,
        Scheme::Bdi,
        Scheme::Biscaling,
        Scheme::Raw,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Simcom => "simcom",
            Scheme::Fpc => "fpc",
            Scheme::Bdi => "bdi",
            Scheme::Biscaling => "biscaling",
            Scheme::Raw => "raw",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simcom" => Ok(Scheme::Simcom),
            "fpc" => Ok(Scheme::Fpc),
            "bdi" => Ok(Scheme::Bdi),
            "biscaling" => Ok(Scheme::Biscaling),
            "raw" => Ok(Scheme::Raw),
            other => Err(format!(
                "unknown scheme `{other}` (expected simcom, fpc, bdi, biscaling, or raw)"
            )),
        }
    }
}

/// Per-run simulator configuration.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub scheme: Scheme,
    /// Apply Flip-N-Write to stored data.
    pub fnw: bool,
    /// Count sideband bit changes (approximable, compressible, flip bits)
    /// in the bit-write totals.
    pub count_sideband: bool,
}

impl SimConfig {
    pub fn new(scheme: Scheme) -> SimConfig {
        SimConfig {
            scheme,
            fnw: true,
            count_sideband: true,
        }
    }

    pub fn without_fnw(mut self) -> SimConfig {
        self.fnw = false;
        self
    }
}

/// One address range annotated as approximable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityEntry {
    /// Inclusive start, 64-byte aligned.
    pub start: u64,
    /// Exclusive end, 64-byte aligned.
    pub end: u64,
    pub af: f64,
    /// Word width annotation consumed by precision scaling.
    pub word_width: u8,
}

/// Ordered, non-overlapping approximable ranges. A lookup miss means the
/// data is precise.
#[derive(Debug, Clone, Default)]
pub struct QualityTable {
    entries: Vec<QualityEntry>,
}

impl QualityTable {
    pub fn new() -> QualityTable {
        QualityTable::default()
    }

    pub fn add(&mut self, entry: QualityEntry) -> Result<(), MemError> {
        if !entry.start.is_multiple_of(BLOCK_LEN as u64) || !entry.end.is_multiple_of(BLOCK_LEN as u64) {
            return Err(MemError::QualityTable(format!(
                "range {:#x}..{:#x} is not block aligned",
                entry.start, entry.end
            )));
        }
        if entry.start >= entry.end {
            return Err(MemError::QualityTable(format!(
                "empty range {:#x}..{:#x}",
                entry.start, entry.end
            )));
        }
        if !(0.0..=1.0).contains(&entry.af) {
            return Err(MemError::QualityTable(format!(
                "approximation factor {} outside [0, 1]",
                entry.af
            )));
        }
        if entry.word_width != 8 && entry.word_width != 16 {
            return Err(MemError::QualityTable(format!(
                "word width {} not 8 or 16",
                entry.word_width
            )));
        }
        if self
            .entries
            .iter()
            .any(|e| entry.start < e.end && e.start < entry.end)
        {
            return Err(MemError::QualityTable(format!(
                "range {:#x}..{:#x} overlaps an existing entry",
                entry.start, entry.end
            )));
        }
        self.entries.push(entry);
        self.entries.sort_by_key(|e| e.start);
        Ok(())
    }

    pub fn lookup(&self, addr: u64) -> Option<&QualityEntry> {
        self.entries
            .iter()
            .find(|e| e.start <= addr && addr < e.end)
    }

    pub fn entries(&self) -> &[QualityEntry] {
        &self.entries
    }
}

/// A 64-byte-aligned write of one block.
#[derive(Debug, Clone)]
pub struct WriteBlock {
    pub addr: u64,
    pub payload: [u8; BLOCK_LEN],
}

/// Sideband state kept per block outside the data cells.
#[derive(Debug, Clone, Copy, Default)]
struct BlockSideband {
    written: bool,
    approximable: bool,
    compressible: bool,
    /// One flip bit per 8-byte unit of the stored extent.
    flips: u8,
    stored_len: u8,
}

/// Monotonic per-run counters.
#[derive(Debug, Clone, Copy, Default)]
pub struct Counters {
    pub write_accesses: u64,
    pub read_accesses: u64,
    pub approximable_writes: u64,
    pub precise_writes: u64,
    pub total_bit_writes: u64,
    pub total_write_units: u64,
    /// Bits a raw uncompressed write would have flipped, per this run's
    /// memory contents. Basis for the savings breakdown.
    pub bits_raw_baseline: u64,
    /// Bits the compressed form flips before Flip-N-Write.
    pub bits_before_fnw: u64,
    pub precise_compression_savings: i64,
    pub approx_compression_savings: i64,
    /// Bit-writes spent on sideband state (flip bits, approximable and
    /// compressible bits); zero when sideband counting is off.
    pub sideband_bit_writes: u64,
    /// Approximable writes per selected compression mode id.
    pub mode_histogram: [u64; 6],
    /// Approximable writes compressed by a non-adaptive scheme.
    pub other_compressible: u64,
    /// Approximable writes stored raw.
    pub incompressible: u64,
}

impl Counters {
    pub fn latency_ns(&self) -> u64 {
        self.total_write_units * WRITE_UNIT_NS
    }

    pub fn energy_units(&self) -> u64 {
        self.total_bit_writes
    }
}

/// Per-access write report.
#[derive(Debug, Clone, Copy)]
pub struct WriteReport {
    pub bit_writes: u64,
    pub write_units: u64,
    pub compressible: bool,
    pub approximable: bool,
    /// Selected mode id when the adaptive compressor ran.
    pub mode: Option<u8>,
    pub stored_len: usize,
}

/// Latency in write units and energy in bit-writes for one access.
pub fn latency_energy(report: &WriteReport) -> (u64, u64) {
    (report.write_units, report.bit_writes)
}

/// Simulated byte-addressable non-volatile memory.
#[derive(Debug)]
pub struct NvmState {
    mem: Vec<u8>,
    side: Vec<BlockSideband>,
    quality: QualityTable,
    config: SimConfig,
    pub counters: Counters,
    recording: Option<crate::trace::Trace>,
}

impl NvmState {
    /// Creates a zero-filled memory of `size` bytes (rounded up to whole
    /// blocks).
    pub fn new(size: usize, config: SimConfig) -> NvmState {
        let blocks = size.div_ceil(BLOCK_LEN).max(1);
        NvmState {
            mem: vec![0; blocks * BLOCK_LEN],
            side: vec![BlockSideband::default(); blocks],
            quality: QualityTable::new(),
            config,
            counters: Counters::default(),
            recording: None,
        }
    }

    /// Starts capturing every access as a trace record.
    pub fn start_recording(&mut self) {
        self.recording = Some(crate::trace::Trace::default());
    }

    /// Takes the trace recorded so far, if recording was enabled.
    pub fn take_trace(&mut self) -> Option<crate::trace::Trace> {
        self.recording.take()
    }

    pub fn config(&self) -> SimConfig {
        self.config
    }

    pub fn size(&self) -> usize {
        self.mem.len()
    }

    pub fn quality(&self) -> &QualityTable {
        &self.quality
    }

    pub fn quality_mut(&mut self) -> &mut QualityTable {
        &mut self.quality
    }

    fn block_index(&self, addr: u64) -> Result<usize, MemError> {
        if !addr.is_multiple_of(BLOCK_LEN as u64) {
            return Err(MemError::Misaligned(addr));
        }
        let idx = (addr / BLOCK_LEN as u64) as usize;
        if idx >= self.side.len() {
            return Err(MemError::OutOfBounds {
                addr,
                size: self.mem.len(),
            });
        }
        Ok(idx)
    }

    /// Writes one block, classifying it via the quality table: a hit routes
    /// the payload through the approximate compressor at the entry's
    /// approximation factor, a miss through the precise path.
    pub fn write_access(&mut self, block: &WriteBlock) -> Result<WriteReport, MemError> {
        let approx = self
            .quality
            .lookup(block.addr)
            .map(|e| (e.af, e.word_width));
        self.write_access_classified(block, approx)
    }

    /// Writes one block with an explicit classification, used by trace
    /// replay where the approximable flag rides in the trace record.
    pub fn write_access_classified(
        &mut self,
        block: &WriteBlock,
        approx: Option<(f64, u8)>,
    ) -> Result<WriteReport, MemError> {
        let idx = self.block_index(block.addr)?;
        let payload = &block.payload;
        let approximable = approx.is_some();
        if let Some(trace) = &mut self.recording {
            trace.records.push(crate::trace::TraceRecord::Write {
                addr: block.addr,
                payload: *payload,
                approximable,
            });
        }

        // Compression stage. A candidate that does not shrink the block
        // falls back to raw storage with the compressible bit clear.
        let (stored, compressible, mode) = match (self.config.scheme, approx) {
            (Scheme::Raw, _) => (payload.to_vec(), false, None),
            (_, None) => match baselines::fpc_compress(payload, 0.0) {
                Some(v) => (v, true, None),
                None => (payload.to_vec(), false, None),
            },
            (Scheme::Simcom, Some((af, _))) => match codec::compress_adaptive(payload, af) {
                Some(c) => {
                    let id = c.mode.id();
                    (codec::serialize(&c)?, true, Some(id))
                }
                None => (payload.to_vec(), false, None),
            },
            (Scheme::Fpc, Some((af, _))) => match baselines::fpc_compress(payload, af) {
                Some(v) => (v, true, None),
                None => (payload.to_vec(), false, None),
            },
            (Scheme::Bdi, Some((af, _))) => match baselines::bdi_compress(payload, af) {
                Some(v) => (v, true, None),
                None => (payload.to_vec(), false, None),
            },
            (Scheme::Biscaling, Some((af, width))) => {
                match baselines::biscaling_compress(payload, width, af)? {
                    Some(v) => (v, true, None),
                    None => (payload.to_vec(), false, None),
                }
            }
        };
        debug_assert!(!compressible || stored.len() < BLOCK_LEN);

        let base = block.addr as usize;
        let len = stored.len();
        let units = fnw::units_for(len);

        // Counterfactual costs for the savings breakdown: a raw write and
        // the compressed form without Flip-N-Write, both against the
        // current cell contents.
        let raw_bits = hamming(payload, &self.mem[base..base + BLOCK_LEN]);
        let compressed_bits = hamming(&stored, &self.mem[base..base + len]);

        let old_flips: Vec<bool> = (0..units).map(|u| self.side[idx].flips & (1 << u) != 0).collect();
        let (cells, new_flips, data_writes, flip_writes) = if self.config.fnw {
            let enc = fnw::fnw_encode(&stored, &self.mem[base..base + len], &old_flips)?;
            (enc.stored, enc.flips, enc.data_bit_writes, enc.flip_bit_writes)
        } else {
            (stored, old_flips, compressed_bits, 0)
        };

        let side = &mut self.side[idx];
        let mut sideband_writes = 0;
        if self.config.count_sideband {
            sideband_writes += flip_writes;
            sideband_writes += u64::from(side.approximable != approximable);
            sideband_writes += u64::from(side.compressible != compressible);
        }
        let bit_writes = data_writes + sideband_writes;

        // Commit. Stale bytes past the new extent stay untouched; the
        // stored length bounds every later read.
        self.mem[base..base + len].copy_from_slice(&cells);
        for (u, &flip) in new_flips.iter().enumerate() {
            if flip {
                side.flips |= 1 << u;
            } else {
                side.flips &= !(1 << u);
            }
        }
        side.written = true;
        side.approximable = approximable;
        side.compressible = compressible;
        side.stored_len = len as u8;

        let c = &mut self.counters;
        c.write_accesses += 1;
        c.total_bit_writes += bit_writes;
        c.total_write_units += units as u64;
        c.bits_raw_baseline += raw_bits;
        c.bits_before_fnw += compressed_bits;
        c.sideband_bit_writes += sideband_writes;
        let saving = raw_bits as i64 - compressed_bits as i64;
        if approximable {
            c.approximable_writes += 1;
            c.approx_compression_savings += saving;
            match (mode, compressible) {
                (Some(id), _) => c.mode_histogram[id as usize] += 1,
                (None, true) => c.other_compressible += 1,
                (None, false) => c.incompressible += 1,
            }
        } else {
            c.precise_writes += 1;
            c.precise_compression_savings += saving;
        }

        Ok(WriteReport {
            bit_writes,
            write_units: units as u64,
            compressible,
            approximable,
            mode,
            stored_len: len,
        })
    }

    /// Reads one block back: Flip-N-Write decode, then the decompression
    /// path selected by the sideband bits.
    pub fn read_access(&mut self, addr: u64) -> Result<[u8; BLOCK_LEN], MemError> {
        let idx = self.block_index(addr)?;
        let side = self.side[idx];
        if !side.written {
            return Err(MemError::Uninitialized(addr));
        }
        if let Some(trace) = &mut self.recording {
            trace.records.push(crate::trace::TraceRecord::Read { addr });
        }
        let base = addr as usize;
        let len = side.stored_len as usize;
        let units = fnw::units_for(len);
        let flips: Vec<bool> = (0..units).map(|u| side.flips & (1 << u) != 0).collect();
        let logical = if self.config.fnw {
            fnw::fnw_decode(&self.mem[base..base + len], &flips)?
        } else {
            self.mem[base..base + len].to_vec()
        };

        self.counters.read_accesses += 1;
        if !side.compressible {
            return Ok(codec::decompress(
                &logical,
                SidebandBits {
                    compressible: false,
                    approximable: side.approximable,
                },
            )?);
        }
        if !side.approximable {
            return Ok(baselines::fpc_decompress(&logical)?);
        }
        match self.config.scheme {
            Scheme::Simcom => Ok(codec::decompress(
                &logical,
                SidebandBits {
                    compressible: true,
                    approximable: true,
                },
            )?),
            _ => Ok(baselines::decode(&logical)?),
        }
    }

    /// Sideband snapshot for one block: (approximable, compressible,
    /// stored length). `None` until the block is first written.
    pub fn sideband(&self, addr: u64) -> Result<Option<(bool, bool, usize)>, MemError> {
        let idx = self.block_index(addr)?;
        let side = self.side[idx];
        Ok(side
            .written
            .then_some((side.approximable, side.compressible, side.stored_len as usize)))
    }
}

fn hamming(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| (x ^ y).count_ones() as u64).sum()
}
