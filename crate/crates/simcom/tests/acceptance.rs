//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers. Run with `cargo test --test acceptance --
//! --nocapture` to see every line.

use simcom::codec::{self, BLOCK_LEN, MODES};
use simcom::fnw;
use simcom::memsim::{NvmState, QualityEntry, Scheme, SimConfig, WriteBlock};
use simcom::metrics;
use simcom::runner::{self, SweepConfig, QUALITY_TARGET, QUALITY_TOLERANCE};
use simcom::workloads::{
    self, natural_image, parse_ppm, run_kernel, state_for, synth_bitmap, write_ppm, BitmapImage,
    KernelKind, SynthKind,
};

struct Xorshift(u64);

impl Xorshift {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn byte(&mut self) -> u8 {
        (self.next() >> 32) as u8
    }

    /// Blocks drawn from a mixture of distributions so both the
    /// compressible and incompressible paths are exercised.
    fn block(&mut self, family: u64) -> [u8; BLOCK_LEN] {
        let mut block = [0u8; BLOCK_LEN];
        match family % 4 {
            0 => {
                for b in block.iter_mut() {
                    *b = self.byte();
                }
            }
            1 => {
                // Smooth random walk.
                let mut v = self.byte() as i16;
                for b in block.iter_mut() {
                    v = (v + (self.next() % 13) as i16 - 6).clamp(0, 255);
                    *b = v as u8;
                }
            }
            2 => {
                // Repeated pixel with sparse perturbations.
                let px = [self.byte(), self.byte(), self.byte()];
                for (i, b) in block.iter_mut().enumerate() {
                    *b = px[i % 3];
                }
                let hits = self.next() % 6;
                for _ in 0..hits {
                    let at = (self.next() % 64) as usize;
                    block[at] = block[at].wrapping_add((self.next() % 24) as u8);
                }
            }
            _ => {
                // Zero-heavy with small words.
                for chunk in block.chunks_exact_mut(4) {
                    if self.next().is_multiple_of(3) {
                        chunk[0] = (self.next() % 16) as u8;
                    }
                }
            }
        }
        block
    }
}

fn corpus_images() -> Vec<BitmapImage> {
    (1..=4)
        .map(|seed| {
            // Through the on-disk format so the corpus is genuine PPM data.
            let bytes = write_ppm(&natural_image(96, 96, seed)).unwrap();
            parse_ppm(&bytes).unwrap()
        })
        .collect()
}

/// Criterion 1: at af = 0 the write-read pipeline is bit-identical to a
/// raw replay, for randomized blocks in every mode and for full kernel
/// runs.
#[test]
fn acceptance_01_lossless_at_zero() {
    let mut rng = Xorshift(0x0123_4567_89ab_cdef);
    for mode in MODES {
        for i in 0..10_000u64 {
            let block = rng.block(i);
            let (candidate, _) = codec::compress_with_mode(&block, mode, 0.0);
            match candidate {
                Some(c) => {
                    let bytes = codec::serialize(&c).unwrap();
                    let out = codec::decompress_frame(&bytes, BLOCK_LEN).unwrap();
                    assert_eq!(&out[..], &block[..], "mode {} block {i}", mode.label());
                }
                None => {
                    let out = codec::decompress(
                        &block,
                        codec::SidebandBits {
                            compressible: false,
                            approximable: true,
                        },
                    )
                    .unwrap();
                    assert_eq!(out, block);
                }
            }
        }
    }

    // Full pipeline through simulated memory for every scheme.
    for scheme in Scheme::ALL {
        let mut state = NvmState::new(64 * 64, SimConfig::new(scheme));
        state
            .quality_mut()
            .add(QualityEntry {
                start: 0,
                end: 64 * 64,
                af: 0.0,
                word_width: 8,
            })
            .unwrap();
        for i in 0..2_000u64 {
            let payload = rng.block(i);
            let addr = (i % 64) * 64;
            state.write_access(&WriteBlock { addr, payload }).unwrap();
            assert_eq!(state.read_access(addr).unwrap(), payload, "{scheme:?}");
        }
    }

    // Kernel runs at af = 0 match the raw-scheme replay bit for bit.
    let rgb = natural_image(64, 64, 11);
    for kind in KernelKind::ALL {
        let img = runner::kernel_input(&rgb, kind);
        let mut raw_state = state_for(&img, SimConfig::new(Scheme::Raw));
        let raw = run_kernel(kind, &img, &mut raw_state, 0.0).unwrap();
        for scheme in [Scheme::Simcom, Scheme::Fpc, Scheme::Bdi, Scheme::Biscaling] {
            let mut state = state_for(&img, SimConfig::new(scheme));
            let run = run_kernel(kind, &img, &mut state, 0.0).unwrap();
            assert_eq!(run.output.data, raw.output.data, "{kind:?} under {scheme:?}");
        }
    }
    eprintln!("acceptance 1 (lossless at zero): PASS - 60000 blocks across 6 modes, 10000 memory accesses across 5 schemes, 4 kernels x 4 schemes bit-identical");
}

/// Criterion 2: reconstructed channels never deviate more than
/// af * maxValue, for af in {0.01, 0.03, 0.05, 0.1}.
#[test]
fn acceptance_02_error_bound() {
    let mut rng = Xorshift(0xfeed_f00d_dead_beef);
    let mut checked = 0u64;
    for &af in &[0.01, 0.03, 0.05, 0.1] {
        for mode in MODES {
            let bound = (af * mode.max_value() as f64).floor() as i64;
            for i in 0..10_000u64 {
                let block = rng.block(i);
                let (candidate, _) = codec::compress_with_mode(&block, mode, af);
                let Some(c) = candidate else { continue };
                let bytes = codec::serialize(&c).unwrap();
                let out = codec::decompress_frame(&bytes, BLOCK_LEN).unwrap();
                let step = mode.bpc as usize / 8;
                for off in (0..BLOCK_LEN).step_by(step) {
                    let (a, b) = match mode.bpc {
                        8 => (block[off] as i64, out[off] as i64),
                        _ => (
                            u16::from_le_bytes([block[off], block[off + 1]]) as i64,
                            u16::from_le_bytes([out[off], out[off + 1]]) as i64,
                        ),
                    };
                    assert!(
                        (a - b).abs() <= bound,
                        "af {af} mode {} channel at {off}: {a} vs {b} (bound {bound})",
                        mode.label()
                    );
                    checked += 1;
                }
            }
        }
    }
    eprintln!("acceptance 2 (error bound): PASS - {checked} reconstructed channels within af * maxValue for af in {{0.01, 0.03, 0.05, 0.1}}");
}

/// Criterion 3: the similar-pixel structural vector: four similar 3-byte
/// pixels plus a dissimilar trailing byte at af = 0.05 compress to one
/// base/run pair with the remainder bit set; 6 bytes on the 16-byte
/// framing, a 10-byte saving.
#[test]
fn acceptance_03_structural_vector() {
    let mut frame = Vec::new();
    for px in [
        [92u8, 141, 203],
        [96, 139, 199],
        [90, 143, 206],
        [93, 140, 201],
        [95, 142, 204],
    ] {
        frame.extend_from_slice(&px);
    }
    frame.push(17);
    assert_eq!(frame.len(), 16);

    let (candidate, _) = codec::compress_frame(&frame, MODES[1], 0.05).unwrap();
    let block = candidate.expect("frame compresses");
    assert_eq!(block.pairs.len(), 1, "one base/run pair");
    assert!(block.remainder.is_some(), "remainder bit set");
    let bytes = codec::serialize(&block).unwrap();
    assert_eq!(bytes.len(), 6, "serialized size");
    assert_eq!(16 - bytes.len(), 10, "bytes saved");
    assert_eq!(bytes[4] & 0x80, 0x80, "remainder bit in the run byte");
    let restored = codec::decompress_frame(&bytes, 16).unwrap();
    assert_eq!(restored[15], 17, "remainder stored verbatim");
    for (o, r) in frame.iter().zip(&restored) {
        assert!((*o as i32 - *r as i32).unsigned_abs() as f64 <= 0.05 * 255.0);
    }
    eprintln!("acceptance 3 (structural vector): PASS - 1 pair + remainder, 6 bytes on the 16-byte framing, 10 saved");
}

/// Criterion 4: partition geometry for the 3-channel byte mode.
#[test]
fn acceptance_04_partition_geometry() {
    let block = [0u8; BLOCK_LEN];
    let (words, remainder) = codec::partition(&block, MODES[1]);
    assert_eq!(words.len(), 21);
    assert_eq!(remainder.len(), 1);
    eprintln!("acceptance 4 (partition geometry): PASS - mode 3C1B yields 21 words + 1-byte remainder");
}

/// Criterion 5: similarity trend. Per image and format, the
/// continuous-similar-word ratio is non-decreasing across the af sweep,
/// reaches 1.0 at af = 1, and is strictly positive at af = 0.
///
/// Non-decrease is asserted at the trace level (the property stated for
/// the ratio operation); per-block group membership under the greedy scan
/// is not monotone (base resets shift group boundaries), so per-block
/// violations are reported as a diagnostic.
#[test]
fn acceptance_05_similarity_trend() {
    let afs = [0.0, 0.01, 0.02, 0.05, 0.1, 1.0];
    let mut block_violations = 0usize;
    let mut traces = 0usize;
    for img in corpus_images() {
        for mode in MODES {
            let converted = img.to_format(mode.cc, mode.bpc);
            let blocks: Vec<[u8; BLOCK_LEN]> = converted
                .data
                .chunks_exact(BLOCK_LEN)
                .map(|c| c.try_into().unwrap())
                .collect();
            let ratios: Vec<f64> = afs
                .iter()
                .map(|&af| metrics::similar_word_ratio(blocks.iter(), mode, af))
                .collect();
            for pair in ratios.windows(2) {
                assert!(
                    pair[1] >= pair[0],
                    "ratio decreased for {}: {ratios:?}",
                    mode.label()
                );
            }
            assert_eq!(*ratios.last().unwrap(), 1.0, "af = 1 must group every word");
            assert!(
                ratios[0] > 0.0,
                "af = 0 ratio must be positive for natural images ({})",
                mode.label()
            );
            traces += 1;

            for block in &blocks {
                let mut prev = 0usize;
                for &af in &afs {
                    let (g, _) = metrics::similar_words_in_block(block, mode, af);
                    if g < prev {
                        block_violations += 1;
                        break;
                    }
                    prev = g;
                }
            }
        }
    }
    eprintln!("acceptance 5 (similarity trend): PASS - {traces} image-format traces non-decreasing, 1.0 at af = 1, positive at af = 0 (note: {block_violations} individual blocks are non-monotone under the greedy grouping; the trend holds per trace)");
}

/// Criterion 6: at matched 3% output error, the adaptive scheme's
/// corpus-mean bit-write ratio is strictly below approximate FPC, BDI, and
/// precision scaling on every corpus mean.
#[test]
fn acceptance_06_comparative_direction() {
    let schemes = [Scheme::Simcom, Scheme::Fpc, Scheme::Bdi, Scheme::Biscaling];
    let mut sums = [0.0f64; 4];
    let mut runs = 0usize;
    let mut interpolated = 0usize;
    for rgb in corpus_images() {
        for kind in KernelKind::ALL {
            let img = runner::kernel_input(&rgb, kind);
            let reference = runner::raw_reference(kind, &img, true).unwrap();
            for (i, &scheme) in schemes.iter().enumerate() {
                let matched = runner::quality_search(
                    kind,
                    &img,
                    scheme,
                    true,
                    QUALITY_TARGET,
                    QUALITY_TOLERANCE,
                    &reference,
                )
                .unwrap();
                sums[i] += matched.ratio_raw_fnw;
                interpolated += usize::from(matched.interpolated);
            }
            runs += 1;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / runs as f64).collect();
    for i in 1..4 {
        assert!(
            means[0] < means[i],
            "simcom mean {:.4} not below {} mean {:.4}",
            means[0],
            schemes[i].label(),
            means[i]
        );
    }
    eprintln!(
        "acceptance 6 (comparative direction): PASS - mean bit-write ratio at 3% error: simcom {:.4} < fpc {:.4}, bdi {:.4}, biscaling {:.4} over {runs} kernel-image pairs ({interpolated} matched by curve interpolation)",
        means[0], means[1], means[2], means[3]
    );
}

/// Criterion 7: on gradient bitmaps of each format at af = 0.03, the
/// selector picks the true mode (or an equal-mean-difference mode with a
/// smaller serialization) for at least 90% of blocks.
#[test]
fn acceptance_07_mode_selector_accuracy() {
    for (i, &mode) in MODES.iter().enumerate() {
        let img = synth_bitmap(mode.cc, mode.bpc, SynthKind::Gradient, 96, 96, 41 + i as u64);
        let mut correct = 0usize;
        let mut total = 0usize;
        for chunk in img.data.chunks_exact(BLOCK_LEN) {
            let block: &[u8; BLOCK_LEN] = chunk.try_into().unwrap();
            total += 1;
            let Some(selected) = codec::compress_adaptive(block, 0.03) else {
                continue;
            };
            if selected.mode == mode {
                correct += 1;
                continue;
            }
            let (true_candidate, true_mean) = codec::compress_with_mode(block, mode, 0.03);
            let (_, sel_mean) = codec::compress_with_mode(block, selected.mode, 0.03);
            let true_size = true_candidate.map_or(BLOCK_LEN, |c| c.serialized_len());
            if sel_mean == true_mean && selected.serialized_len() <= true_size {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / total as f64;
        assert!(
            accuracy >= 0.9,
            "selector accuracy {:.3} below 0.9 for {}",
            accuracy,
            mode.label()
        );
        eprintln!(
            "acceptance 7 (mode selector, {}): PASS - {correct}/{total} blocks ({:.1}%)",
            mode.label(),
            accuracy * 100.0
        );
    }
}

// ---------------------------------------------------------------------------
// Criterion 8 oracles: independently written exact FPC and exact BDI.

/// Textbook frequent-pattern compression at zero slack: per 32-bit word,
/// the cheapest exactly-matching pattern; runs of zero words merge up to
/// eight per entry. Returns the byte size of tag plus packed entries.
fn exact_fpc_oracle_size(block: &[u8; BLOCK_LEN]) -> usize {
    let sx = |w: u32, bits: u32| -> bool {
        let shift = 32 - bits;
        ((w as i32) << shift >> shift) as u32 == w
    };
    let mut bits_total = 0u32;
    let mut zero_run = 0u32;
    for chunk in block.chunks_exact(4) {
        let w = u32::from_le_bytes(chunk.try_into().unwrap());
        if w == 0 {
            zero_run += 1;
            continue;
        }
        while zero_run > 0 {
            bits_total += 6;
            zero_run = zero_run.saturating_sub(8);
        }
        // A halfword is a sign-extended byte when its high byte is the
        // sign fill of its low byte.
        let is_sx_byte = |h: u32| {
            let b = h & 0xff;
            let fill = if b & 0x80 != 0 { 0xff00 } else { 0 };
            h == b | fill
        };
        let halves_are_bytes = is_sx_byte(w & 0xffff) && is_sx_byte(w >> 16);
        // Halfword sign-extended, halfword padded with a zero halfword,
        // and two byte-sign-extended halfwords all carry 16 payload bits.
        let data_bits = if sx(w, 4) {
            4
        } else if sx(w, 8) {
            8
        } else if sx(w, 16) || w & 0xffff == 0 || halves_are_bytes {
            16
        } else if chunk.iter().all(|&b| b == chunk[0]) {
            8
        } else {
            32
        };
        bits_total += 3 + data_bits;
    }
    while zero_run > 0 {
        bits_total += 6;
        zero_run = zero_run.saturating_sub(8);
    }
    1 + bits_total.div_ceil(8) as usize
}

/// Textbook base-delta compression at zero slack: smallest (base, delta)
/// encoding where every word's delta to the first word fits exactly.
fn exact_bdi_oracle_size(block: &[u8; BLOCK_LEN]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (bs, ds) in [(8usize, 1usize), (8, 2), (8, 4), (4, 1), (4, 2), (2, 1)] {
        let words: Vec<i128> = block
            .chunks_exact(bs)
            .map(|c| {
                let mut buf = [0u8; 16];
                buf[..bs].copy_from_slice(c);
                i128::from_le_bytes(buf)
            })
            .collect();
        let lo = -(1i128 << (8 * ds - 1));
        let hi = (1i128 << (8 * ds - 1)) - 1;
        if words.iter().all(|&w| (lo..=hi).contains(&(w - words[0]))) {
            let size = 2 + bs + (BLOCK_LEN / bs) * ds;
            best = Some(best.map_or(size, |b: usize| b.min(size)));
        }
    }
    best
}

/// Criterion 8: differential oracles. Approximate FPC and BDI at af = 0
/// agree with the exact-scheme oracles on compressibility, compressed
/// size, and reconstruction; greedy group counts match the brute-force
/// scan.
#[test]
fn acceptance_08_oracle_equivalence() {
    let mut rng = Xorshift(0x5151_d00d_cafe_f00d);
    let mut fpc_compressible = 0usize;
    let mut bdi_compressible = 0usize;
    for i in 0..10_000u64 {
        let block = rng.block(i);

        let oracle_size = exact_fpc_oracle_size(&block);
        match simcom::baselines::fpc_compress(&block, 0.0) {
            Some(out) => {
                assert!(oracle_size < BLOCK_LEN, "oracle disagrees on compressibility");
                assert_eq!(out.len(), oracle_size, "fpc size mismatch on block {i}");
                assert_eq!(
                    simcom::baselines::fpc_decompress(&out).unwrap(),
                    block,
                    "fpc not lossless at zero"
                );
                fpc_compressible += 1;
            }
            None => assert!(oracle_size >= BLOCK_LEN, "fpc refused a compressible block"),
        }

        let oracle = exact_bdi_oracle_size(&block);
        match simcom::baselines::bdi_compress(&block, 0.0) {
            Some(out) => {
                assert_eq!(Some(out.len()), oracle, "bdi size mismatch on block {i}");
                assert_eq!(
                    simcom::baselines::bdi_decompress(&out).unwrap(),
                    block,
                    "bdi not lossless at zero"
                );
                bdi_compressible += 1;
            }
            None => assert_eq!(oracle, None, "bdi refused a compressible block"),
        }

        // Greedy group counts against the straightforward scan.
        for mode in MODES {
            for af in [0.0, 0.05, 0.25] {
                let sizes = codec::group_sizes(&block, mode, af);
                let mut oracle_groups = 1usize;
                let w = mode.word_bytes();
                let mut base = 0usize;
                for j in 1..BLOCK_LEN / w {
                    let (a, b) = (&block[base * w..(base + 1) * w], &block[j * w..(j + 1) * w]);
                    let delta = match mode.bpc {
                        8 => a
                            .iter()
                            .zip(b)
                            .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs())
                            .max()
                            .unwrap(),
                        _ => a
                            .chunks_exact(2)
                            .zip(b.chunks_exact(2))
                            .map(|(x, y)| {
                                (u16::from_le_bytes([x[0], x[1]]) as i32
                                    - u16::from_le_bytes([y[0], y[1]]) as i32)
                                    .unsigned_abs()
                            })
                            .max()
                            .unwrap(),
                    };
                    if delta as f64 / mode.max_value() as f64 > af {
                        oracle_groups += 1;
                        base = j;
                    }
                }
                assert_eq!(sizes.len(), oracle_groups, "group count, mode {}", mode.label());
            }
        }
    }
    eprintln!("acceptance 8 (oracle equivalence): PASS - 10000 blocks; fpc agreed ({fpc_compressible} compressible), bdi agreed ({bdi_compressible} compressible), greedy groups matched the scan oracle");
}

/// Criterion 9: Flip-N-Write never writes more than 33 bits per 8-byte
/// unit, and rewriting identical content writes nothing.
#[test]
fn acceptance_09_fnw_bound() {
    let mut rng = Xorshift(0xabcd_ef01_2345_6789);
    for _ in 0..10_000 {
        let old = rng.next().to_le_bytes();
        let new = rng.next().to_le_bytes();
        let flip = rng.next() & 1 == 1;
        let enc = fnw::fnw_encode(&new, &old, &[flip]).unwrap();
        assert!(enc.bit_writes() <= 33, "unit wrote {} bits", enc.bit_writes());
        assert_eq!(fnw::fnw_decode(&enc.stored, &enc.flips).unwrap(), new);

        let same = fnw::fnw_encode(&new, &new, &[false]).unwrap();
        assert_eq!(same.bit_writes(), 0);
    }
    eprintln!("acceptance 9 (fnw bound): PASS - 10000 units within 33 bit-writes; identity writes zero bits");
}

/// Criterion 10: repeated sweeps with the same seed produce byte-identical
/// CSV.
#[test]
fn acceptance_10_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for seed in [21u64, 22] {
        let path = dir.path().join(format!("img{seed}.ppm"));
        workloads::save_ppm(&natural_image(48, 48, seed), &path).unwrap();
        paths.push(path);
    }
    let mut config = SweepConfig::new(paths);
    config.kernels = vec![KernelKind::Sobel, KernelKind::Grayscale];
    config.schemes = vec![Scheme::Simcom, Scheme::Fpc];
    config.afs = vec![0.0, 0.05];
    config.seed = 99;
    let (a, fail_a) = runner::cmd_sweep(&config).unwrap();
    let (b, fail_b) = runner::cmd_sweep(&config).unwrap();
    assert_eq!(a.as_bytes(), b.as_bytes());
    assert_eq!((fail_a, fail_b), (0, 0));
    eprintln!("acceptance 10 (sweep determinism): PASS - {} CSV bytes byte-identical across reruns", a.len());
}
