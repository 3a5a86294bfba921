//! Deterministic synthetic bitmaps: drifting gradients for mode-selection
//! experiments, uniform noise, grayscale stored in RGB channels, and a
//! value-noise generator with natural-image statistics (smooth regions,
//! mild texture, occasional flat runs).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BitmapImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthKind {
    Gradient,
    Noise,
    GrayscaleInRgb,
}

impl SynthKind {
    pub const ALL: [SynthKind; 3] = [
        SynthKind::Gradient,
        SynthKind::Noise,
        SynthKind::GrayscaleInRgb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SynthKind::Gradient => "gradient",
            SynthKind::Noise => "noise",
            SynthKind::GrayscaleInRgb => "grayscale-in-rgb",
        }
    }
}

impl std::fmt::Display for SynthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gradient" => Ok(SynthKind::Gradient),
            "noise" => Ok(SynthKind::Noise),
            "grayscale-in-rgb" => Ok(SynthKind::GrayscaleInRgb),
            other => Err(format!(
                "unknown generator `{other}` (expected gradient, noise, or grayscale-in-rgb)"
            )),
        }
    }
}

/// Small deterministic hash for per-pixel jitter.
fn mix(seed: u64, x: u64, y: u64, c: u64) -> u64 {
    let mut h = seed ^ x.wrapping_mul(0x9e3779b97f4a7c15)
        ^ y.wrapping_mul(0xc2b2ae3d27d4eb4f)
        ^ c.wrapping_mul(0x165667b19e3779f9);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h
}

pub fn synth_bitmap(
    cc: u8,
    bpc: u8,
    kind: SynthKind,
    width: u32,
    height: u32,
    seed: u64,
) -> BitmapImage {
    assert!(matches!(cc, 1 | 3 | 4) && matches!(bpc, 8 | 16));
    let mut img = BitmapImage::new(width, height, cc, bpc);
    match kind {
        SynthKind::Gradient => fill_gradient(&mut img, seed),
        SynthKind::Noise => fill_noise(&mut img, seed),
        SynthKind::GrayscaleInRgb => fill_grayscale_in_rgb(&mut img, seed),
    }
    img
}

/// Ramps that drift one level per pixel with unit jitter, every channel
/// moving in lockstep at well separated bases. Rows run boustrophedon so
/// the drift never folds sharply inside a 64-byte block; adjacent 8-bit
/// channel deltas stay at or below 3.
fn fill_gradient(img: &mut BitmapImage, seed: u64) {
    let wide = img.bpc == 16;
    let unit: i64 = if wide { 260 } else { 1 };
    let bases: [i64; 4] = if wide {
        [1000, 14000, 27000, 65535]
    } else {
        [10, 60, 110, 255]
    };
    let max = img.max_value() as i64;
    for y in 0..img.height {
        for x in 0..img.width {
            // Left-to-right on even rows, right-to-left on odd ones, with a
            // slight per-row ripple.
            let ramp = if y % 2 == 0 {
                x as i64
            } else {
                img.width as i64 - 1 - x as i64
            };
            let signal = unit * (ramp + (y % 4) as i64 + (seed % 61) as i64 % 16);
            let jitter = (mix(seed, x as u64, y as u64, 5) % 3) as i64 - 1;
            for c in 0..img.cc {
                let value = if c == 3 {
                    // Opaque alpha.
                    bases[3]
                } else {
                    bases[c as usize] + signal + jitter * unit
                };
                img.set_sample(x, y, c, value.clamp(0, max) as u16);
            }
        }
    }
}

fn fill_noise(img: &mut BitmapImage, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = img.max_value();
    let (w, h, cc) = (img.width, img.height, img.cc);
    for y in 0..h {
        for x in 0..w {
            for c in 0..cc {
                img.set_sample(x, y, c, rng.gen_range(0..=max) as u16);
            }
        }
    }
}

/// A natural-statistics gray field replicated into every color channel
/// (alpha stays opaque).
fn fill_grayscale_in_rgb(img: &mut BitmapImage, seed: u64) {
    let field = natural_field(img.width, img.height, seed);
    let shift = img.bpc - 8;
    let opaque = img.max_value() as u16;
    for y in 0..img.height {
        for x in 0..img.width {
            let v8 = field[(y * img.width + x) as usize];
            let v = if shift == 0 {
                v8 as u16
            } else {
                v8 as u16 * 257
            };
            for c in 0..img.cc {
                let sample = if c == 3 { opaque } else { v };
                img.set_sample(x, y, c, sample);
            }
        }
    }
}

/// Bilinear value noise on a square lattice, one octave.
fn octave(width: u32, height: u32, seed: u64, cell: u32, amp: f64, out: &mut [f64]) {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-amp..=amp)).collect();
    for y in 0..height {
        let gy = y / cell;
        let fy = (y % cell) as f64 / cell as f64;
        for x in 0..width {
            let gx = x / cell;
            let fx = (x % cell) as f64 / cell as f64;
            let at = |dx: u32, dy: u32| grid[((gy + dy) * gw + gx + dx) as usize];
            let top = at(0, 0) * (1.0 - fx) + at(1, 0) * fx;
            let bottom = at(0, 1) * (1.0 - fx) + at(1, 1) * fx;
            out[(y * width + x) as usize] += top * (1.0 - fy) + bottom * fy;
        }
    }
}

/// Multi-octave luminance field quantized to 8 bits. A detail mask keeps
/// texture out of smooth regions, so low-gradient patches quantize to flat
/// runs the way photo backgrounds do.
fn natural_field(width: u32, height: u32, seed: u64) -> Vec<u8> {
    let n = (width * height) as usize;
    let mut base = vec![128.0f64; n];
    octave(width, height, seed ^ 0x517c_c1b7_2722_0a95, 32, 80.0, &mut base);

    let mut detail = vec![0.0f64; n];
    octave(width, height, seed ^ 0x6c62_272e_07bb_0142, 12, 26.0, &mut detail);
    octave(width, height, seed ^ 0x27d4_eb2f_1656_67c5, 6, 9.0, &mut detail);

    let mut mask = vec![0.0f64; n];
    octave(width, height, seed ^ 0x2545_f491_4f6c_dd1d, 48, 1.0, &mut mask);

    (0..n)
        .map(|i| {
            let m = (mask[i].abs() * 1.6).min(1.0);
            let v = base[i] + detail[i] * m;
            // Sparse single-level sensor noise.
            let h = mix(seed, i as u64, 0, 9);
            let noise = if h.is_multiple_of(16) { (h >> 8) as i64 % 3 - 1 } else { 0 };
            (v.round() as i64 + noise).clamp(0, 255) as u8
        })
        .collect()
}

/// A deterministic photo-like RGB image: shared luminance structure with
/// correlated, lower-amplitude chroma.
pub fn natural_image(width: u32, height: u32, seed: u64) -> BitmapImage {
    let luma = natural_field(width, height, seed);
    let mut chroma1 = vec![0.0f64; (width * height) as usize];
    let mut chroma2 = vec![0.0f64; (width * height) as usize];
    octave(width, height, seed ^ 0x94d0_49bb_1331_11eb, 32, 22.0, &mut chroma1);
    octave(width, height, seed ^ 0xbf58_476d_1ce4_e5b9, 28, 18.0, &mut chroma2);

    let mut img = BitmapImage::new(width, height, 3, 8);
    for y in 0..height {
        for x in 0..width {
            let i = (y * width + x) as usize;
            let l = luma[i] as f64;
            let r = l + chroma1[i];
            let g = l - 0.4 * chroma1[i] + 0.3 * chroma2[i];
            let b = l + chroma2[i];
            img.set_sample(x, y, 0, r.round().clamp(0.0, 255.0) as u16);
            img.set_sample(x, y, 1, g.round().clamp(0.0, 255.0) as u16);
            img.set_sample(x, y, 2, b.round().clamp(0.0, 255.0) as u16);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_adjacent_deltas_are_small() {
        let img = synth_bitmap(3, 8, SynthKind::Gradient, 8, 8, 42);
        for y in 0..8 {
            for x in 1..8 {
                for c in 0..3 {
                    let d = (img.sample(x, y, c) as i32 - img.sample(x - 1, y, c) as i32).abs();
                    assert!(d <= 4, "delta {d} at ({x}, {y}, {c})");
                }
            }
        }
    }

    #[test]
    fn grayscale_in_rgb_has_equal_channels() {
        let img = synth_bitmap(3, 8, SynthKind::GrayscaleInRgb, 16, 16, 7);
        for y in 0..16 {
            for x in 0..16 {
                let r = img.sample(x, y, 0);
                assert_eq!(r, img.sample(x, y, 1));
                assert_eq!(r, img.sample(x, y, 2));
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in SynthKind::ALL {
            let a = synth_bitmap(3, 8, kind, 32, 16, 99);
            let b = synth_bitmap(3, 8, kind, 32, 16, 99);
            assert_eq!(a.data, b.data);
        }
        assert_eq!(natural_image(32, 32, 5).data, natural_image(32, 32, 5).data);
        assert_ne!(natural_image(32, 32, 5).data, natural_image(32, 32, 6).data);
    }

    #[test]
    fn natural_images_contain_flat_runs() {
        let img = natural_image(64, 64, 3);
        let mut identical = 0usize;
        for y in 0..64 {
            for x in 1..64 {
                let same = (0..3).all(|c| img.sample(x, y, c) == img.sample(x - 1, y, c));
                identical += usize::from(same);
            }
        }
        assert!(identical > 50, "only {identical} identical adjacent pixels");
    }
}
