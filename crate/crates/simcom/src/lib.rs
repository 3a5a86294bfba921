//! Similarity-aware approximate compression for NVM main memory.
//!
//! The crate bundles the block codec, reference compressors, Flip-N-Write
//! encoding, a byte-addressable NVM write-path simulator, image workloads
//! that drive it, and the metrics used to compare schemes.

pub mod baselines;
pub mod codec;
pub mod fnw;
pub mod memsim;
pub mod workloads;
pub mod metrics;
pub mod runner;
pub mod trace;

pub use codec::{Mode, MODES};
pub use memsim::{NvmState, Scheme, SimConfig};
