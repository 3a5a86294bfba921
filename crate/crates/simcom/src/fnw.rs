//! Flip-N-Write encoding over 8-byte write units.
//!
//! A unit whose new content differs from the stored content in more than
//! half its bits is stored complemented, with a sideband flip bit marking
//! the inversion. Bit-write accounting compares against the current cell
//! contents, so rewriting identical data costs nothing.

use thiserror::Error;

/// Bytes per serial write unit.
pub const UNIT_BYTES: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FnwError {
    #[error("length mismatch: new {new} bytes vs old {old}")]
    LengthMismatch { new: usize, old: usize },
    #[error("flip vector holds {got} bits, {need} units present")]
    FlipCountMismatch { got: usize, need: usize },
}

/// Result of encoding one write against the previous cell contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnwEncoded {
    /// Bytes to place in the cells (possibly complemented per unit).
    pub stored: Vec<u8>,
    /// One flip bit per 8-byte unit.
    pub flips: Vec<bool>,
    /// Changed cell bits.
    pub data_bit_writes: u64,
    /// Changed flip bits.
    pub flip_bit_writes: u64,
}

impl FnwEncoded {
    /// Changed data bits plus changed flip bits.
    pub fn bit_writes(&self) -> u64 {
        self.data_bit_writes + self.flip_bit_writes
    }
}

pub fn units_for(len: usize) -> usize {
    len.div_ceil(UNIT_BYTES)
}

/// Encodes `new` against the currently stored bytes `old` and the current
/// per-unit flip bits. Inputs must have equal length; the final partial
/// unit, if any, is padded with zeros on both sides for the flip decision.
pub fn fnw_encode(new: &[u8], old: &[u8], old_flips: &[bool]) -> Result<FnwEncoded, FnwError> {
    if new.len() != old.len() {
        return Err(FnwError::LengthMismatch {
            new: new.len(),
            old: old.len(),
        });
    }
    let units = units_for(new.len());
    if old_flips.len() != units {
        return Err(FnwError::FlipCountMismatch {
            got: old_flips.len(),
            need: units,
        });
    }

    let mut stored = Vec::with_capacity(new.len());
    let mut flips = Vec::with_capacity(units);
    let mut data_bit_writes = 0u64;
    let mut flip_bit_writes = 0u64;
    for (u, &was_flipped) in old_flips.iter().enumerate() {
        let start = u * UNIT_BYTES;
        let end = (start + UNIT_BYTES).min(new.len());
        let hamming: u32 = new[start..end]
            .iter()
            .zip(&old[start..end])
            .map(|(&n, &o)| (n ^ o).count_ones())
            .sum();
        let flip = hamming > 32;
        for (&n, &o) in new[start..end].iter().zip(&old[start..end]) {
            let cell = if flip { !n } else { n };
            data_bit_writes += (cell ^ o).count_ones() as u64;
            stored.push(cell);
        }
        if flip != was_flipped {
            flip_bit_writes += 1;
        }
        flips.push(flip);
    }

    Ok(FnwEncoded {
        stored,
        flips,
        data_bit_writes,
        flip_bit_writes,
    })
}

/// Recovers the logical bytes from stored cells and their flip bits.
pub fn fnw_decode(stored: &[u8], flips: &[bool]) -> Result<Vec<u8>, FnwError> {
    let units = units_for(stored.len());
    if flips.len() != units {
        return Err(FnwError::FlipCountMismatch {
            got: flips.len(),
            need: units,
        });
    }
    Ok(stored
        .iter()
        .enumerate()
        .map(|(i, &b)| if flips[i / UNIT_BYTES] { !b } else { b })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewriting_identical_data_writes_nothing() {
        let data = [0xabu8; 16];
        let enc = fnw_encode(&data, &data, &[false, false]).unwrap();
        assert_eq!(enc.bit_writes(), 0);
        assert_eq!(enc.stored, data);
        assert_eq!(enc.flips, vec![false, false]);
    }

    #[test]
    fn full_inversion_costs_only_the_flip_bit() {
        let old = [0b1010_1100u8; 8];
        let new: Vec<u8> = old.iter().map(|b| !b).collect();
        let enc = fnw_encode(&new, &old, &[false]).unwrap();
        assert_eq!(enc.bit_writes(), 1);
        assert_eq!(enc.stored, old);
        assert_eq!(enc.flips, vec![true]);
        assert_eq!(fnw_decode(&enc.stored, &enc.flips).unwrap(), new);
    }

    #[test]
    fn per_unit_writes_bounded_by_half_plus_one() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..10_000 {
            let old = next().to_le_bytes();
            let new = next().to_le_bytes();
            let old_flip = next() & 1 == 1;
            let enc = fnw_encode(&new, &old, &[old_flip]).unwrap();
            assert!(enc.bit_writes() <= 33, "unit wrote {} bits", enc.bit_writes());
            assert_eq!(fnw_decode(&enc.stored, &enc.flips).unwrap(), new);
        }
    }

    #[test]
    fn partial_unit_roundtrip() {
        let old = [1u8, 2, 3, 4, 5, 6];
        let new = [250u8, 249, 248, 247, 246, 245];
        let enc = fnw_encode(&new, &old, &[false]).unwrap();
        assert_eq!(enc.stored.len(), 6);
        assert_eq!(fnw_decode(&enc.stored, &enc.flips).unwrap(), new);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            fnw_encode(&[0; 8], &[0; 9], &[false, false]),
            Err(FnwError::LengthMismatch { .. })
        ));
    }
}
