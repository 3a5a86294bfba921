//! Image kernels that generate simulator traffic: the input bitmap is
//! written into an approximable region, pixels are read back through the
//! decompression path, and results stream out through the write path in
//! 64-byte blocks. Scalar state (histograms, lookup tables) lives in a
//! precise region.

use crate::codec::BLOCK_LEN;
use crate::memsim::{Counters, MemError, NvmState, QualityEntry, SimConfig, WriteBlock};

use super::{BitmapImage, WorkloadError};

/// 3x3 binomial smoothing kernel with its divisor.
pub const DEFAULT_CONV_KERNEL: ([[i32; 3]; 3], i32) = ([[1, 2, 1], [2, 4, 2], [1, 2, 1]], 16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Sobel,
    Conv2d,
    Grayscale,
    Histeq,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Sobel,
        KernelKind::Conv2d,
        KernelKind::Grayscale,
        KernelKind::Histeq,
    ];

    pub fn label(self) -> &'static str {
        match self {
            KernelKind::Sobel => "sobel",
            KernelKind::Conv2d => "conv2d",
            KernelKind::Grayscale => "grayscale",
            KernelKind::Histeq => "histeq",
        }
    }

    /// The input format the kernel computes on.
    fn check_input(self, img: &BitmapImage) -> Result<(), WorkloadError> {
        let ok = match self {
            KernelKind::Sobel | KernelKind::Conv2d => img.cc == 1,
            KernelKind::Grayscale => img.cc == 3,
            KernelKind::Histeq => img.cc == 1 && img.bpc == 8,
        };
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::UnsupportedFormat(format!(
                "{} cannot run on a {}-channel {}-bit image",
                self.label(),
                img.cc,
                img.bpc
            )))
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sobel" => Ok(KernelKind::Sobel),
            "conv2d" => Ok(KernelKind::Conv2d),
            "grayscale" => Ok(KernelKind::Grayscale),
            "histeq" => Ok(KernelKind::Histeq),
            other => Err(format!(
                "unknown kernel `{other}` (expected sobel, conv2d, grayscale, or histeq)"
            )),
        }
    }
}

/// Output image plus the counters accumulated over the run.
#[derive(Debug)]
pub struct KernelRun {
    pub output: BitmapImage,
    pub counters: Counters,
}

fn round_blocks(len: usize) -> usize {
    len.div_ceil(BLOCK_LEN) * BLOCK_LEN
}

/// Builds a state large enough for any kernel over `img`: input region,
/// output region, and a precise scratch area.
pub fn state_for(img: &BitmapImage, config: SimConfig) -> NvmState {
    let region = round_blocks(img.data.len());
    NvmState::new(region * 2 + 2048, config)
}

struct Layout {
    in_base: u64,
    out_base: u64,
    scratch_base: u64,
}

fn setup(
    state: &mut NvmState,
    img: &BitmapImage,
    out_len: usize,
    af: f64,
) -> Result<Layout, WorkloadError> {
    let in_len = round_blocks(img.data.len());
    let out_rounded = round_blocks(out_len);
    let layout = Layout {
        in_base: 0,
        out_base: in_len as u64,
        scratch_base: (in_len + out_rounded) as u64,
    };
    state.quality_mut().add(QualityEntry {
        start: layout.in_base,
        end: layout.in_base + in_len as u64,
        af,
        word_width: img.bpc,
    })?;
    state.quality_mut().add(QualityEntry {
        start: layout.out_base,
        end: layout.out_base + out_rounded as u64,
        af,
        word_width: img.bpc,
    })?;
    Ok(layout)
}

fn write_stream(state: &mut NvmState, base: u64, bytes: &[u8]) -> Result<(), MemError> {
    for (i, chunk) in bytes.chunks(BLOCK_LEN).enumerate() {
        let mut payload = [0u8; BLOCK_LEN];
        payload[..chunk.len()].copy_from_slice(chunk);
        state.write_access(&WriteBlock {
            addr: base + (i * BLOCK_LEN) as u64,
            payload,
        })?;
    }
    Ok(())
}

fn read_span(
    state: &mut NvmState,
    base: u64,
    offset: usize,
    len: usize,
) -> Result<Vec<u8>, MemError> {
    let first = offset / BLOCK_LEN;
    let last = (offset + len - 1) / BLOCK_LEN;
    let mut buf = Vec::with_capacity((last - first + 1) * BLOCK_LEN);
    for b in first..=last {
        buf.extend_from_slice(&state.read_access(base + (b * BLOCK_LEN) as u64)?);
    }
    let start = offset - first * BLOCK_LEN;
    Ok(buf[start..start + len].to_vec())
}

fn decode_samples(bytes: &[u8], bpc: u8) -> Vec<u16> {
    match bpc {
        8 => bytes.iter().map(|&b| b as u16).collect(),
        _ => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
    }
}

fn push_sample(out: &mut Vec<u8>, value: u16, bpc: u8) {
    match bpc {
        8 => out.push(value as u8),
        _ => out.extend_from_slice(&value.to_le_bytes()),
    }
}

/// Reads one row of a single- or multi-channel image out of the simulator.
fn fetch_row(
    state: &mut NvmState,
    base: u64,
    img: &BitmapImage,
    y: u32,
) -> Result<Vec<u16>, MemError> {
    let row_bytes = img.width as usize * img.cc as usize * (img.bpc as usize / 8);
    let bytes = read_span(state, base, y as usize * row_bytes, row_bytes)?;
    Ok(decode_samples(&bytes, img.bpc))
}

/// Runs a 3x3 stencil over the in-memory image, replicating edges.
fn stencil_pass<F>(
    state: &mut NvmState,
    layout: &Layout,
    img: &BitmapImage,
    mut f: F,
) -> Result<Vec<u8>, MemError>
where
    F: FnMut(&[&[u16]; 3], u32, u32) -> u16,
{
    let (w, h) = (img.width, img.height);
    let mut out = Vec::with_capacity(img.data.len());
    let mut prev = fetch_row(state, layout.in_base, img, 0)?;
    let mut cur = prev.clone();
    let mut next = fetch_row(state, layout.in_base, img, 1.min(h - 1))?;
    for y in 0..h {
        if y > 0 {
            prev = std::mem::replace(&mut cur, std::mem::take(&mut next));
            next = fetch_row(state, layout.in_base, img, (y + 1).min(h - 1))?;
        }
        let rows = [&prev[..], &cur[..], &next[..]];
        for x in 0..w {
            push_sample(&mut out, f(&rows, x, w), img.bpc);
        }
    }
    Ok(out)
}

fn clamp_x(x: u32, dx: i32, w: u32) -> usize {
    (x as i64 + dx as i64).clamp(0, w as i64 - 1) as usize
}

/// Runs a kernel against a fresh simulator state: the input image is
/// written into its approximable region first, then the kernel streams its
/// output back through the write path. Returns the output image as read
/// back from simulated memory.
pub fn run_kernel(
    kind: KernelKind,
    img: &BitmapImage,
    state: &mut NvmState,
    af: f64,
) -> Result<KernelRun, WorkloadError> {
    kind.check_input(img)?;
    match kind {
        KernelKind::Conv2d => {
            let (coeffs, divisor) = DEFAULT_CONV_KERNEL;
            run_conv2d(img, state, af, coeffs, divisor)
        }
        KernelKind::Sobel => run_sobel(img, state, af),
        KernelKind::Grayscale => run_grayscale(img, state, af),
        KernelKind::Histeq => run_histeq(img, state, af),
    }
}

fn finish(
    state: &mut NvmState,
    layout: &Layout,
    mut output: BitmapImage,
    bytes: Vec<u8>,
) -> Result<KernelRun, WorkloadError> {
    debug_assert_eq!(bytes.len(), output.data.len());
    write_stream(state, layout.out_base, &bytes)?;
    output.data = read_span(state, layout.out_base, 0, output.data.len())?;
    Ok(KernelRun {
        output,
        counters: state.counters,
    })
}

fn run_sobel(
    img: &BitmapImage,
    state: &mut NvmState,
    af: f64,
) -> Result<KernelRun, WorkloadError> {
    let output = BitmapImage::new(img.width, img.height, 1, img.bpc);
    let layout = setup(state, img, output.data.len(), af)?;
    write_stream(state, layout.in_base, &img.data)?;

    let max = img.max_value() as i64;
    let bytes = stencil_pass(state, &layout, img, |rows, x, w| {
        let px = |dy: usize, dx: i32| rows[dy][clamp_x(x, dx, w)] as i64;
        let gx = px(0, 1) - px(0, -1) + 2 * (px(1, 1) - px(1, -1)) + px(2, 1) - px(2, -1);
        let gy = px(2, -1) + 2 * px(2, 0) + px(2, 1) - px(0, -1) - 2 * px(0, 0) - px(0, 1);
        let mag = ((gx * gx + gy * gy) as f64).sqrt().round() as i64;
        mag.min(max) as u16
    })?;
    finish(state, &layout, output, bytes)
}

/// 3x3 integer convolution with round-half-up division; results clamp to
/// the sample range. The identity kernel reproduces the input exactly.
pub fn run_conv2d(
    img: &BitmapImage,
    state: &mut NvmState,
    af: f64,
    coeffs: [[i32; 3]; 3],
    divisor: i32,
) -> Result<KernelRun, WorkloadError> {
    assert!(divisor > 0);
    KernelKind::Conv2d.check_input(img)?;
    let output = BitmapImage::new(img.width, img.height, 1, img.bpc);
    let layout = setup(state, img, output.data.len(), af)?;
    write_stream(state, layout.in_base, &img.data)?;

    let max = img.max_value() as i64;
    let bytes = stencil_pass(state, &layout, img, |rows, x, w| {
        let mut acc = 0i64;
        for (dy, row) in coeffs.iter().enumerate() {
            for (dx, &c) in row.iter().enumerate() {
                acc += c as i64 * rows[dy][clamp_x(x, dx as i32 - 1, w)] as i64;
            }
        }
        let v = (acc + divisor as i64 / 2).div_euclid(divisor as i64);
        v.clamp(0, max) as u16
    })?;
    finish(state, &layout, output, bytes)
}

fn run_grayscale(
    img: &BitmapImage,
    state: &mut NvmState,
    af: f64,
) -> Result<KernelRun, WorkloadError> {
    let output = BitmapImage::new(img.width, img.height, 1, img.bpc);
    let layout = setup(state, img, output.data.len(), af)?;
    write_stream(state, layout.in_base, &img.data)?;

    let mut bytes = Vec::with_capacity(output.data.len());
    for y in 0..img.height {
        let row = fetch_row(state, layout.in_base, img, y)?;
        for px in row.chunks_exact(3) {
            push_sample(&mut bytes, BitmapImage::luma(px[0], px[1], px[2]), img.bpc);
        }
    }
    finish(state, &layout, output, bytes)
}

fn run_histeq(
    img: &BitmapImage,
    state: &mut NvmState,
    af: f64,
) -> Result<KernelRun, WorkloadError> {
    let output = BitmapImage::new(img.width, img.height, 1, 8);
    let layout = setup(state, img, output.data.len(), af)?;
    write_stream(state, layout.in_base, &img.data)?;

    // First pass: histogram, parked in the precise scratch region.
    let mut hist = [0u32; 256];
    for y in 0..img.height {
        for v in fetch_row(state, layout.in_base, img, y)? {
            hist[v as usize] += 1;
        }
    }
    let hist_bytes: Vec<u8> = hist.iter().flat_map(|c| c.to_le_bytes()).collect();
    write_stream(state, layout.scratch_base, &hist_bytes)?;

    // Cumulative mapping normalized over the populated range.
    let total = img.width as u64 * img.height as u64;
    let mut cdf = [0u64; 256];
    let mut acc = 0u64;
    for (i, &count) in hist.iter().enumerate() {
        acc += count as u64;
        cdf[i] = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let denom = (total - cdf_min).max(1);
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| ((c.saturating_sub(cdf_min) * 255 + denom / 2) / denom) as u8)
        .collect();
    write_stream(state, layout.scratch_base + 1024, &lut)?;

    // Second pass: map every pixel through the equalization table.
    let mut bytes = Vec::with_capacity(output.data.len());
    for y in 0..img.height {
        for v in fetch_row(state, layout.in_base, img, y)? {
            bytes.push(lut[v as usize]);
        }
    }
    finish(state, &layout, output, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memsim::Scheme;
    use crate::workloads::synth::{natural_image, synth_bitmap, SynthKind};

    fn gray_image(width: u32, height: u32, seed: u64) -> BitmapImage {
        natural_image(width, height, seed).to_format(1, 8)
    }

    #[test]
    fn sobel_of_constant_image_is_zero() {
        let mut img = BitmapImage::new(16, 16, 1, 8);
        img.data.fill(90);
        let mut state = state_for(&img, SimConfig::new(Scheme::Raw));
        let run = run_kernel(KernelKind::Sobel, &img, &mut state, 0.0).unwrap();
        assert!(run.output.data.iter().all(|&b| b == 0));
    }

    #[test]
    fn identity_convolution_reproduces_input_at_zero() {
        let img = gray_image(24, 16, 11);
        let identity = [[0, 0, 0], [0, 1, 0], [0, 0, 0]];
        for scheme in [Scheme::Raw, Scheme::Simcom] {
            let mut state = state_for(&img, SimConfig::new(scheme));
            let run = run_conv2d(&img, &mut state, 0.0, identity, 1).unwrap();
            assert_eq!(run.output.data, img.data);
        }
    }

    #[test]
    fn grayscale_applies_integer_luma() {
        let mut img = BitmapImage::new(8, 1, 3, 8);
        for x in 0..8 {
            img.set_sample(x, 0, 0, 255);
            img.set_sample(x, 0, 1, 255);
            img.set_sample(x, 0, 2, 255);
        }
        let mut state = state_for(&img, SimConfig::new(Scheme::Raw));
        let run = run_kernel(KernelKind::Grayscale, &img, &mut state, 0.0).unwrap();
        assert!(run.output.data.iter().all(|&b| b == 255));
    }

    #[test]
    fn histeq_flattens_a_two_level_image() {
        let mut img = BitmapImage::new(16, 4, 1, 8);
        for (i, b) in img.data.iter_mut().enumerate() {
            *b = if i % 2 == 0 { 100 } else { 101 };
        }
        let mut state = state_for(&img, SimConfig::new(Scheme::Raw));
        let run = run_kernel(KernelKind::Histeq, &img, &mut state, 0.0).unwrap();
        let out: std::collections::BTreeSet<u8> = run.output.data.iter().copied().collect();
        assert!(out.contains(&255));
        assert_eq!(out.len(), 2);
        assert!(state.counters.precise_writes > 0);
        assert!(state.counters.approximable_writes > 0);
    }

    #[test]
    fn unsupported_formats_are_rejected() {
        let rgb = synth_bitmap(3, 8, SynthKind::Gradient, 8, 8, 1);
        let mut state = state_for(&rgb, SimConfig::new(Scheme::Raw));
        assert!(matches!(
            run_kernel(KernelKind::Sobel, &rgb, &mut state, 0.0),
            Err(WorkloadError::UnsupportedFormat(_))
        ));
        let gray = rgb.to_format(1, 8);
        let mut state = state_for(&gray, SimConfig::new(Scheme::Raw));
        assert!(matches!(
            run_kernel(KernelKind::Grayscale, &gray, &mut state, 0.0),
            Err(WorkloadError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn kernels_at_zero_match_raw_replay_bit_for_bit() {
        let rgb = natural_image(32, 24, 5);
        let gray = rgb.to_format(1, 8);
        for kind in KernelKind::ALL {
            let img = if kind == KernelKind::Grayscale { &rgb } else { &gray };
            let mut raw_state = state_for(img, SimConfig::new(Scheme::Raw));
            let raw = run_kernel(kind, img, &mut raw_state, 0.0).unwrap();
            for scheme in [Scheme::Simcom, Scheme::Fpc, Scheme::Bdi, Scheme::Biscaling] {
                let mut state = state_for(img, SimConfig::new(scheme));
                let run = run_kernel(kind, img, &mut state, 0.0).unwrap();
                assert_eq!(run.output.data, raw.output.data, "{kind:?} under {scheme:?}");
            }
        }
    }
}
