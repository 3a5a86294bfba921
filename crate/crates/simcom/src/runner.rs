//! Command implementations behind the CLI: per-block compression reports,
//! kernel sweeps with CSV output, mode-selection statistics, matched-quality
//! search, and trace replay.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::baselines;
use crate::codec::{self, BLOCK_LEN, MODES};
use crate::memsim::{Counters, Scheme, SimConfig, WRITE_UNIT_NS};
use crate::metrics::{self, EvaluationReport, SavingsBreakdown};
use crate::trace::{Trace, TraceError};
use crate::workloads::{
    self, load_ppm, run_kernel, state_for, synth_bitmap, BitmapImage, KernelKind, SynthKind,
};

/// Default approximation-factor sweep grid.
pub const DEFAULT_AF_GRID: [f64; 5] = [0.0, 0.01, 0.02, 0.05, 0.1];

/// Matched-quality search parameters: target output error and tolerance in
/// RMSE, bracket upper bound on the approximation factor.
pub const QUALITY_TARGET: f64 = 0.03;
pub const QUALITY_TOLERANCE: f64 = 0.002;
pub const QUALITY_BRACKET_HIGH: f64 = 0.5;

pub const CSV_HEADER: &str = "workload,image,scheme,af,rmse,bit_write_ratio_raw,bit_write_ratio_raw_fnw,latency_units,latency_ns,energy_units,mode_1c1b,mode_3c1b,mode_4c1b,mode_1c2b,mode_3c2b,mode_4c2b,mode_other,mode_incompressible,error";

/// Errors split by exit code: usage problems exit 2, run failures exit 1.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl RunnerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Usage(_) => 2,
            RunnerError::Run(_) => 1,
        }
    }
}

/// Which raw replay the bit-write ratio divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Raw,
    RawFnw,
}

impl std::str::FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(BaselineMode::Raw),
            "raw-fnw" => Ok(BaselineMode::RawFnw),
            other => Err(format!("unknown baseline `{other}` (expected raw or raw-fnw)")),
        }
    }
}

/// Compresses every 64-byte block of a file and reports the results.
/// Returns the report text; optionally writes the compressed stream (per
/// block: u16 little-endian stored length, one flag byte, stored bytes).
pub fn cmd_compress(
    input: &Path,
    scheme: Scheme,
    af: f64,
    out: Option<&Path>,
) -> Result<String, RunnerError> {
    if !(0.0..=1.0).contains(&af) {
        return Err(RunnerError::Usage(format!(
            "approximation factor {af} outside [0, 1]"
        )));
    }
    let data = std::fs::read(input)
        .map_err(|e| RunnerError::Usage(format!("cannot read {}: {e}", input.display())))?;
    if data.is_empty() || data.len() % BLOCK_LEN != 0 {
        return Err(RunnerError::Usage(format!(
            "input length {} is not a positive multiple of {BLOCK_LEN}",
            data.len()
        )));
    }

    let mut report = String::new();
    let mut stream = Vec::new();
    let mut compressed_total = 0usize;
    let mut incompressible = 0usize;
    for (i, chunk) in data.chunks_exact(BLOCK_LEN).enumerate() {
        let block: &[u8; BLOCK_LEN] = chunk.try_into().unwrap();
        let (stored, compressible, detail) = compress_one(block, scheme, af)?;
        compressed_total += stored.len();
        incompressible += usize::from(!compressible);
        writeln!(
            report,
            "block {i:4}  compressible {}  size {:2}  {detail}",
            u8::from(compressible),
            stored.len()
        )
        .unwrap();
        stream.extend_from_slice(&(stored.len() as u16).to_le_bytes());
        stream.push(u8::from(compressible) | 0b10);
        stream.extend_from_slice(&stored);
    }
    let blocks = data.len() / BLOCK_LEN;
    writeln!(
        report,
        "{} blocks, scheme {}, af {af}: {} -> {} bytes ({:.1}%), {} incompressible",
        blocks,
        scheme.label(),
        data.len(),
        compressed_total,
        100.0 * compressed_total as f64 / data.len() as f64,
        incompressible
    )
    .unwrap();

    if let Some(path) = out {
        std::fs::write(path, &stream)
            .map_err(|e| RunnerError::Run(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(report)
}

fn compress_one(
    block: &[u8; BLOCK_LEN],
    scheme: Scheme,
    af: f64,
) -> Result<(Vec<u8>, bool, String), RunnerError> {
    let compressed: Option<(Vec<u8>, String)> = match scheme {
        Scheme::Simcom => codec::compress_adaptive(block, af).map(|c| {
            let detail = format!(
                "mode {} bases {:2} remainder {}",
                c.mode.label(),
                c.base_count(),
                u8::from(c.remainder.is_some())
            );
            (codec::serialize(&c).expect("valid block"), detail)
        }),
        Scheme::Fpc => baselines::fpc_compress(block, af).map(|v| (v, "fpc".into())),
        Scheme::Bdi => baselines::bdi_compress(block, af).map(|v| (v, "bdi".into())),
        Scheme::Biscaling => baselines::biscaling_compress(block, 8, af)
            .map_err(|e| RunnerError::Run(e.to_string()))?
            .map(|v| (v, "biscaling".into())),
        Scheme::Raw => None,
    };
    Ok(match compressed {
        Some((bytes, detail)) => (bytes, true, detail),
        None => (block.to_vec(), false, "raw".into()),
    })
}

/// Converts an arbitrary loaded image into the format a kernel computes on.
pub fn kernel_input(img: &BitmapImage, kind: KernelKind) -> BitmapImage {
    match kind {
        KernelKind::Grayscale => {
            if img.cc == 3 {
                img.clone()
            } else {
                img.to_format(3, img.bpc)
            }
        }
        KernelKind::Histeq => img.to_format(1, 8),
        _ => {
            if img.cc == 1 {
                img.clone()
            } else {
                img.to_format(1, img.bpc)
            }
        }
    }
}

/// Raw-replay reference data for one (image, kernel) pair.
pub struct RawReference {
    pub output: BitmapImage,
    pub counters_raw: Counters,
    pub counters_raw_fnw: Counters,
}

pub fn raw_reference(
    kind: KernelKind,
    img: &BitmapImage,
    count_sideband: bool,
) -> Result<RawReference, RunnerError> {
    let mut config = SimConfig::new(Scheme::Raw).without_fnw();
    config.count_sideband = count_sideband;
    let mut state = state_for(img, config);
    let run = run_kernel(kind, img, &mut state, 0.0).map_err(run_err)?;
    let mut config_fnw = SimConfig::new(Scheme::Raw);
    config_fnw.count_sideband = count_sideband;
    let mut state_fnw = state_for(img, config_fnw);
    run_kernel(kind, img, &mut state_fnw, 0.0).map_err(run_err)?;
    Ok(RawReference {
        output: run.output,
        counters_raw: state.counters,
        counters_raw_fnw: state_fnw.counters,
    })
}

fn run_err(e: workloads::WorkloadError) -> RunnerError {
    RunnerError::Run(e.to_string())
}

/// Evaluates one (kernel, image, scheme, af) point into a report.
pub fn evaluate_point(
    kind: KernelKind,
    img: &BitmapImage,
    scheme: Scheme,
    af: f64,
    count_sideband: bool,
    reference: &RawReference,
) -> Result<EvaluationReport, RunnerError> {
    let mut config = SimConfig::new(scheme);
    config.count_sideband = count_sideband;
    let mut state = state_for(img, config);
    let run = run_kernel(kind, img, &mut state, af).map_err(run_err)?;
    let c = state.counters;
    Ok(EvaluationReport {
        rmse: metrics::rmse(&run.output, &reference.output)
            .map_err(|e| RunnerError::Run(e.to_string()))?,
        bit_write_ratio_raw: metrics::bit_write_ratio(&c, &reference.counters_raw)
            .map_err(|e| RunnerError::Run(e.to_string()))?,
        bit_write_ratio_raw_fnw: metrics::bit_write_ratio(&c, &reference.counters_raw_fnw)
            .map_err(|e| RunnerError::Run(e.to_string()))?,
        latency_units: c.total_write_units,
        energy_units: c.energy_units(),
        breakdown: SavingsBreakdown::from_counters(&c),
        mode_histogram: c.mode_histogram,
        other_compressible: c.other_compressible,
        incompressible: c.incompressible,
    })
}

/// Outcome of the matched-quality search.
#[derive(Debug, Clone)]
pub struct MatchedQuality {
    pub af: f64,
    pub rmse: f64,
    pub ratio_raw: f64,
    pub ratio_raw_fnw: f64,
    pub latency_units: u64,
    pub energy_units: u64,
    /// Set when no approximation factor lands inside the tolerance window
    /// (stepped quality curves) and the point is interpolated between the
    /// tightest bracketing runs.
    pub interpolated: bool,
}

/// Binary-searches the approximation factor until the output error matches
/// `target` within `tolerance`. When the achievable error set skips the
/// window, the result is linearly interpolated between the bracketing
/// samples, mirroring reading a point off a quality curve.
pub fn quality_search(
    kind: KernelKind,
    img: &BitmapImage,
    scheme: Scheme,
    count_sideband: bool,
    target: f64,
    tolerance: f64,
    reference: &RawReference,
) -> Result<MatchedQuality, RunnerError> {
    let eval = |af: f64| evaluate_point(kind, img, scheme, af, count_sideband, reference);

    let mut lo = 0.0f64;
    let mut lo_point = eval(lo)?;
    let mut hi = QUALITY_BRACKET_HIGH;
    let mut hi_point = eval(hi)?;
    if hi_point.rmse + tolerance < target {
        // Even the most aggressive setting stays under the target; report
        // the bracket top.
        return Ok(matched_from(hi, &hi_point, false));
    }

    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        let point = eval(mid)?;
        if (point.rmse - target).abs() <= tolerance {
            return Ok(matched_from(mid, &point, false));
        }
        if point.rmse < target {
            lo = mid;
            lo_point = point;
        } else {
            hi = mid;
            hi_point = point;
        }
    }

    // Stepped curve: interpolate between the bracketing points.
    let (a, b) = (&lo_point, &hi_point);
    let t = if b.rmse > a.rmse {
        ((target - a.rmse) / (b.rmse - a.rmse)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lerp = |x: f64, y: f64| x + (y - x) * t;
    Ok(MatchedQuality {
        af: lerp(lo, hi),
        rmse: lerp(a.rmse, b.rmse),
        ratio_raw: lerp(a.bit_write_ratio_raw, b.bit_write_ratio_raw),
        ratio_raw_fnw: lerp(a.bit_write_ratio_raw_fnw, b.bit_write_ratio_raw_fnw),
        latency_units: lerp(a.latency_units as f64, b.latency_units as f64).round() as u64,
        energy_units: lerp(a.energy_units as f64, b.energy_units as f64).round() as u64,
        interpolated: true,
    })
}

fn matched_from(af: f64, point: &EvaluationReport, interpolated: bool) -> MatchedQuality {
    MatchedQuality {
        af,
        rmse: point.rmse,
        ratio_raw: point.bit_write_ratio_raw,
        ratio_raw_fnw: point.bit_write_ratio_raw_fnw,
        latency_units: point.latency_units,
        energy_units: point.energy_units,
        interpolated,
    }
}

/// Sweep configuration; fields mirror the CLI flags.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub images: Vec<PathBuf>,
    pub kernels: Vec<KernelKind>,
    pub schemes: Vec<Scheme>,
    pub afs: Vec<f64>,
    pub quality_target: Option<f64>,
    pub count_sideband: bool,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(images: Vec<PathBuf>) -> SweepConfig {
        SweepConfig {
            images,
            kernels: KernelKind::ALL.to_vec(),
            schemes: vec![Scheme::Simcom, Scheme::Fpc, Scheme::Bdi, Scheme::Biscaling],
            afs: DEFAULT_AF_GRID.to_vec(),
            quality_target: None,
            count_sideband: true,
            seed: 0,
        }
    }
}

/// Full-factorial sweep producing CSV rows in deterministic order. Per-run
/// failures become rows with the error column set; the failure count is
/// returned alongside the CSV text.
pub fn cmd_sweep(config: &SweepConfig) -> Result<(String, usize), RunnerError> {
    if config.images.is_empty() {
        return Err(RunnerError::Usage("no input images".into()));
    }
    if config.schemes.is_empty() {
        return Err(RunnerError::Usage("no schemes selected".into()));
    }
    if let Some(bad) = config.afs.iter().find(|af| !(0.0..=1.0).contains(*af)) {
        return Err(RunnerError::Usage(format!(
            "approximation factor {bad} outside [0, 1]"
        )));
    }

    let mut csv = String::new();
    writeln!(csv, "{CSV_HEADER}").unwrap();
    let mut failures = 0usize;

    for path in &config.images {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let loaded = load_ppm(path).map_err(|e| RunnerError::Usage(e.to_string()))?;
        for &kind in &config.kernels {
            let img = kernel_input(&loaded, kind);
            let reference = raw_reference(kind, &img, config.count_sideband)?;
            for &scheme in &config.schemes {
                if let Some(target) = config.quality_target {
                    let row = quality_search(
                        kind,
                        &img,
                        scheme,
                        config.count_sideband,
                        target,
                        QUALITY_TOLERANCE,
                        &reference,
                    );
                    append_matched_row(&mut csv, &stem, kind, scheme, row, &mut failures);
                } else {
                    for &af in &config.afs {
                        let point =
                            evaluate_point(kind, &img, scheme, af, config.count_sideband, &reference);
                        append_point_row(&mut csv, &stem, kind, scheme, af, point, &mut failures);
                    }
                }
            }
        }
    }
    Ok((csv, failures))
}

fn append_point_row(
    csv: &mut String,
    image: &str,
    kind: KernelKind,
    scheme: Scheme,
    af: f64,
    point: Result<EvaluationReport, RunnerError>,
    failures: &mut usize,
) {
    match point {
        Ok(p) => {
            let h = p.mode_histogram;
            writeln!(
                csv,
                "{},{image},{},{af:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{},{},{},{},{},{},",
                kind.label(),
                scheme.label(),
                p.rmse,
                p.bit_write_ratio_raw,
                p.bit_write_ratio_raw_fnw,
                p.latency_units,
                p.latency_units * WRITE_UNIT_NS,
                p.energy_units,
                h[0],
                h[1],
                h[2],
                h[3],
                h[4],
                h[5],
                p.other_compressible,
                p.incompressible
            )
            .unwrap();
        }
        Err(e) => {
            *failures += 1;
            writeln!(
                csv,
                "{},{image},{},{af:.6},,,,,,,,,,,,,,,{}",
                kind.label(),
                scheme.label(),
                csv_escape(&e.to_string())
            )
            .unwrap();
        }
    }
}

fn append_matched_row(
    csv: &mut String,
    image: &str,
    kind: KernelKind,
    scheme: Scheme,
    row: Result<MatchedQuality, RunnerError>,
    failures: &mut usize,
) {
    match row {
        Ok(m) => {
            writeln!(
                csv,
                "{},{image},{},{:.6},{:.6},{:.6},{:.6},{},{},{},,,,,,,,,",
                kind.label(),
                scheme.label(),
                m.af,
                m.rmse,
                m.ratio_raw,
                m.ratio_raw_fnw,
                m.latency_units,
                m.latency_units * WRITE_UNIT_NS,
                m.energy_units
            )
            .unwrap();
        }
        Err(e) => {
            *failures += 1;
            writeln!(
                csv,
                "{},{image},{},,,,,,,,,,,,,,,,{}",
                kind.label(),
                scheme.label(),
                csv_escape(&e.to_string())
            )
            .unwrap();
        }
    }
}

fn csv_escape(text: &str) -> String {
    let cleaned = text.replace(['\n', '\r'], " ");
    if cleaned.contains(',') || cleaned.contains('"') {
        format!("\"{}\"", cleaned.replace('"', "\"\""))
    } else {
        cleaned
    }
}

/// Mode-selection statistics over synthetic bitmaps: one table per
/// generator kind with selected-mode rows and true-format columns.
pub fn cmd_modestats(
    formats: &[(u8, u8)],
    kinds: &[SynthKind],
    af: f64,
    size: (u32, u32),
    seed: u64,
) -> Result<String, RunnerError> {
    if !(0.0..=1.0).contains(&af) {
        return Err(RunnerError::Usage(format!(
            "approximation factor {af} outside [0, 1]"
        )));
    }
    for &(cc, bpc) in formats {
        if codec::Mode::new(cc, bpc).is_none() {
            return Err(RunnerError::Usage(format!("illegal format ({cc}, {bpc})")));
        }
    }

    let mut out = String::new();
    for &kind in kinds {
        writeln!(out, "kind {} (af {af}, {}x{}, seed {seed})", kind.label(), size.0, size.1).unwrap();
        write!(out, "{:>16}", "Mode Ratio (%)").unwrap();
        for &(cc, bpc) in formats {
            write!(out, " {:>9}", format!("({cc},{bpc})")).unwrap();
        }
        writeln!(out).unwrap();

        let tables: Vec<[f64; 7]> = formats
            .iter()
            .map(|&(cc, bpc)| mode_shares(cc, bpc, kind, af, size, seed))
            .collect();
        for (row, label) in MODES
            .iter()
            .map(|m| m.label())
            .chain(std::iter::once("Incompressible"))
            .enumerate()
        {
            write!(out, "{:>16}", label).unwrap();
            for table in &tables {
                write!(out, " {:>9.1}", table[row] * 100.0).unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out).unwrap();
    }
    Ok(out)
}

/// Per-format selected-mode shares (six modes plus incompressible).
pub fn mode_shares(
    cc: u8,
    bpc: u8,
    kind: SynthKind,
    af: f64,
    size: (u32, u32),
    seed: u64,
) -> [f64; 7] {
    let img = synth_bitmap(cc, bpc, kind, size.0, size.1, seed);
    let mut counts = [0u64; 7];
    let mut total = 0u64;
    for chunk in img.data.chunks_exact(BLOCK_LEN) {
        let block: &[u8; BLOCK_LEN] = chunk.try_into().unwrap();
        match codec::compress_adaptive(block, af) {
            Some(c) => counts[c.mode.id() as usize] += 1,
            None => counts[6] += 1,
        }
        total += 1;
    }
    let mut shares = [0.0f64; 7];
    if total > 0 {
        for (s, &c) in shares.iter_mut().zip(&counts) {
            *s = c as f64 / total as f64;
        }
    }
    shares
}

/// Replays a trace under one scheme and reports totals against a raw
/// baseline replay of the same trace.
pub fn cmd_trace_replay(
    path: &Path,
    scheme: Scheme,
    af: f64,
    baseline: BaselineMode,
    count_sideband: bool,
) -> Result<String, RunnerError> {
    if !(0.0..=1.0).contains(&af) {
        return Err(RunnerError::Usage(format!(
            "approximation factor {af} outside [0, 1]"
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunnerError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let trace = Trace::parse(&text).map_err(|e| RunnerError::Usage(e.to_string()))?;

    let mut config = SimConfig::new(scheme);
    config.count_sideband = count_sideband;
    let state = trace.replay(config, af, 8).map_err(replay_err)?;

    let mut base_config = SimConfig::new(Scheme::Raw);
    base_config.count_sideband = count_sideband;
    if baseline == BaselineMode::Raw {
        base_config.fnw = false;
    }
    let base_state = trace.replay(base_config, 0.0, 8).map_err(replay_err)?;

    let c = &state.counters;
    let breakdown = SavingsBreakdown::from_counters(c);
    let mut out = String::new();
    writeln!(out, "trace: {} records ({} writes, {} reads)", trace.records.len(), c.write_accesses, c.read_accesses).unwrap();
    writeln!(out, "scheme {} at af {af}, baseline {}", scheme.label(), match baseline { BaselineMode::Raw => "raw", BaselineMode::RawFnw => "raw-fnw" }).unwrap();
    writeln!(out, "bit writes:      {:10}", c.total_bit_writes).unwrap();
    writeln!(out, "write units:     {:10}  ({} ns)", c.total_write_units, c.latency_ns()).unwrap();
    writeln!(out, "energy units:    {:10}", c.energy_units()).unwrap();
    match metrics::bit_write_ratio(c, &base_state.counters) {
        Ok(ratio) => writeln!(out, "bit-write ratio: {ratio:10.4}").unwrap(),
        Err(e) => writeln!(out, "bit-write ratio: undefined ({e})").unwrap(),
    }
    writeln!(
        out,
        "savings: precise {} approx {} fnw {}",
        breakdown.precise_compression, breakdown.approximate_compression, breakdown.fnw
    )
    .unwrap();
    let h = c.mode_histogram;
    writeln!(
        out,
        "modes: 1C1B {} 3C1B {} 4C1B {} 1C2B {} 3C2B {} 4C2B {} other {} incompressible {}",
        h[0], h[1], h[2], h[3], h[4], h[5], c.other_compressible, c.incompressible
    )
    .unwrap();
    Ok(out)
}

fn replay_err(e: TraceError) -> RunnerError {
    match e {
        TraceError::Parse { .. } => RunnerError::Usage(e.to_string()),
        TraceError::Replay { .. } => RunnerError::Run(e.to_string()),
    }
}
