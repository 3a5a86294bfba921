//! Plain-text memory access traces.
//!
//! One record per line:
//!
//! ```text
//! W <hex addr> <128 hex chars of payload> <0|1 approximable flag>
//! R <hex addr>
//! ```
//!
//! Addresses are 64-byte aligned. Replay drives every record through an
//! [`NvmState`], mapping approximable writes to the configured
//! approximation factor.

use std::fmt::Write as _;

use thiserror::Error;

use crate::codec::BLOCK_LEN;
use crate::memsim::{MemError, NvmState, SimConfig, WriteBlock};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Replay {
        line: usize,
        #[source]
        source: MemError,
    },
}

#[derive(Debug, Clone)]
pub enum TraceRecord {
    Read {
        addr: u64,
    },
    Write {
        addr: u64,
        payload: [u8; BLOCK_LEN],
        approximable: bool,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut records = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let op = fields.next().unwrap();
            let addr = parse_addr(fields.next(), line)?;
            match op {
                "R" => records.push(TraceRecord::Read { addr }),
                "W" => {
                    let payload = parse_payload(fields.next(), line)?;
                    let flag = match fields.next() {
                        Some("0") => false,
                        Some("1") => true,
                        other => {
                            return Err(TraceError::Parse {
                                line,
                                msg: format!("bad approximable flag {other:?}"),
                            })
                        }
                    };
                    records.push(TraceRecord::Write {
                        addr,
                        payload,
                        approximable: flag,
                    });
                }
                other => {
                    return Err(TraceError::Parse {
                        line,
                        msg: format!("unknown operation `{other}`"),
                    })
                }
            }
            if fields.next().is_some() {
                return Err(TraceError::Parse {
                    line,
                    msg: "trailing fields".into(),
                });
            }
        }
        Ok(Trace { records })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            match rec {
                TraceRecord::Read { addr } => {
                    writeln!(out, "R {addr:#x}").unwrap();
                }
                TraceRecord::Write {
                    addr,
                    payload,
                    approximable,
                } => {
                    let mut hex = String::with_capacity(BLOCK_LEN * 2);
                    for b in payload {
                        write!(hex, "{b:02x}").unwrap();
                    }
                    writeln!(out, "W {addr:#x} {hex} {}", u8::from(*approximable)).unwrap();
                }
            }
        }
        out
    }

    /// Smallest memory size covering every record.
    pub fn memory_span(&self) -> usize {
        self.records
            .iter()
            .map(|r| match r {
                TraceRecord::Read { addr } | TraceRecord::Write { addr, .. } => {
                    *addr as usize + BLOCK_LEN
                }
            })
            .max()
            .unwrap_or(BLOCK_LEN)
    }

    /// Replays the trace on a fresh state. Approximable writes run at `af`
    /// with the given precision-scaling word width; precise writes take the
    /// precise path.
    pub fn replay(
        &self,
        config: SimConfig,
        af: f64,
        word_width: u8,
    ) -> Result<NvmState, TraceError> {
        let mut state = NvmState::new(self.memory_span(), config);
        for (i, rec) in self.records.iter().enumerate() {
            let result = match rec {
                TraceRecord::Read { addr } => state.read_access(*addr).map(|_| ()),
                TraceRecord::Write {
                    addr,
                    payload,
                    approximable,
                } => state
                    .write_access_classified(
                        &WriteBlock {
                            addr: *addr,
                            payload: *payload,
                        },
                        approximable.then_some((af, word_width)),
                    )
                    .map(|_| ()),
            };
            result.map_err(|source| TraceError::Replay {
                line: i + 1,
                source,
            })?;
        }
        Ok(state)
    }
}

fn parse_addr(field: Option<&str>, line: usize) -> Result<u64, TraceError> {
    let text = field.ok_or_else(|| TraceError::Parse {
        line,
        msg: "missing address".into(),
    })?;
    let digits = text.strip_prefix("0x").unwrap_or(text);
    let addr = u64::from_str_radix(digits, 16).map_err(|e| TraceError::Parse {
        line,
        msg: format!("bad address `{text}`: {e}"),
    })?;
    if addr % BLOCK_LEN as u64 != 0 {
        return Err(TraceError::Parse {
            line,
            msg: format!("address {addr:#x} not 64-byte aligned"),
        });
    }
    Ok(addr)
}

fn parse_payload(field: Option<&str>, line: usize) -> Result<[u8; BLOCK_LEN], TraceError> {
    let text = field.ok_or_else(|| TraceError::Parse {
        line,
        msg: "missing payload".into(),
    })?;
    if text.len() != BLOCK_LEN * 2 {
        return Err(TraceError::Parse {
            line,
            msg: format!("payload must be {} hex chars, found {}", BLOCK_LEN * 2, text.len()),
        });
    }
    let mut payload = [0u8; BLOCK_LEN];
    for (i, chunk) in text.as_bytes().chunks_exact(2).enumerate() {
        let hex = std::str::from_utf8(chunk).unwrap();
        payload[i] = u8::from_str_radix(hex, 16).map_err(|e| TraceError::Parse {
            line,
            msg: format!("bad payload byte `{hex}`: {e}"),
        })?;
    }
    Ok(payload)
}
