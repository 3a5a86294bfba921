//! Quality and efficiency metrics: normalized root-mean-square error,
//! continuous-similar-word ratios, bit-write ratios against a raw replay,
//! and the per-technique savings breakdown.

use thiserror::Error;

use crate::codec::{self, Mode, BLOCK_LEN};
use crate::memsim::Counters;
use crate::workloads::BitmapImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("baseline produced zero bit-writes; ratio undefined")]
    UndefinedRatio,
}

/// Root-mean-square error between two images of identical shape, with
/// channel samples normalized to [0, 1]. The mean runs over every sample
/// (pixels times channels).
pub fn rmse(candidate: &BitmapImage, baseline: &BitmapImage) -> Result<f64, MetricError> {
    if (candidate.width, candidate.height, candidate.cc, candidate.bpc)
        != (baseline.width, baseline.height, baseline.cc, baseline.bpc)
    {
        return Err(MetricError::ShapeMismatch(format!(
            "{}x{} {}ch {}bit vs {}x{} {}ch {}bit",
            candidate.width,
            candidate.height,
            candidate.cc,
            candidate.bpc,
            baseline.width,
            baseline.height,
            baseline.cc,
            baseline.bpc
        )));
    }
    let max = candidate.max_value() as f64;
    let mut sum = 0.0f64;
    for y in 0..candidate.height {
        for x in 0..candidate.width {
            for c in 0..candidate.cc {
                let d = (candidate.sample(x, y, c) as f64 - baseline.sample(x, y, c) as f64) / max;
                sum += d * d;
            }
        }
    }
    Ok((sum / candidate.sample_count() as f64).sqrt())
}

/// Words of one block that belong to greedy groups of two or more, plus
/// the count of full words. Remainder bytes are excluded.
pub fn similar_words_in_block(block: &[u8; BLOCK_LEN], mode: Mode, af: f64) -> (usize, usize) {
    let sizes = codec::group_sizes(block, mode, af);
    let grouped = sizes.iter().filter(|&&s| s >= 2).sum();
    (grouped, BLOCK_LEN / mode.word_bytes())
}

/// Fraction of full words across the blocks that sit in groups of two or
/// more continuous similar words.
pub fn similar_word_ratio<'a>(
    blocks: impl IntoIterator<Item = &'a [u8; BLOCK_LEN]>,
    mode: Mode,
    af: f64,
) -> f64 {
    let mut grouped = 0usize;
    let mut total = 0usize;
    for block in blocks {
        let (g, t) = similar_words_in_block(block, mode, af);
        grouped += g;
        total += t;
    }
    if total == 0 {
        0.0
    } else {
        grouped as f64 / total as f64
    }
}

/// Scheme bit-writes over baseline bit-writes for replays of the same
/// trace. The caller picks whether the baseline replay applied
/// Flip-N-Write.
pub fn bit_write_ratio(scheme: &Counters, baseline: &Counters) -> Result<f64, MetricError> {
    if baseline.total_bit_writes == 0 {
        return Err(MetricError::UndefinedRatio);
    }
    Ok(scheme.total_bit_writes as f64 / baseline.total_bit_writes as f64)
}

/// Bit-write savings attributed to each technique, all relative to raw
/// uncompressed writes against the same evolving memory contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SavingsBreakdown {
    pub precise_compression: i64,
    pub approximate_compression: i64,
    pub fnw: i64,
}

impl SavingsBreakdown {
    pub fn from_counters(c: &Counters) -> SavingsBreakdown {
        let data_writes = (c.total_bit_writes - c.sideband_bit_writes) as i64;
        SavingsBreakdown {
            precise_compression: c.precise_compression_savings,
            approximate_compression: c.approx_compression_savings,
            fnw: c.bits_before_fnw as i64 - data_writes,
        }
    }

    pub fn total(&self) -> i64 {
        self.precise_compression + self.approximate_compression + self.fnw
    }
}

/// One evaluated (workload, scheme, af) point.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub rmse: f64,
    pub bit_write_ratio_raw: f64,
    pub bit_write_ratio_raw_fnw: f64,
    pub latency_units: u64,
    pub energy_units: u64,
    pub breakdown: SavingsBreakdown,
    pub mode_histogram: [u64; 6],
    pub other_compressible: u64,
    pub incompressible: u64,
}

impl EvaluationReport {
    pub fn histogram_total(&self) -> u64 {
        self.mode_histogram.iter().sum::<u64>() + self.other_compressible + self.incompressible
    }
}
