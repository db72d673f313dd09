//! Frame set: the enciphered subband symbols of every message block.
//!
//! CSV layout, one block header per message block followed by the data
//! rows:
//!
//! ```text
//! # block=0 len=8 padded=8 wraps=0,0,1,0,0,0,0,1
//! message_index,modulus,level,position,symbol_bits
//! 0,107,0,0,0110...
//! ```
//!
//! Level 0 holds the final approximation and level `i ≥ 1` the detail
//! sequence of decomposition level `i`. For a redundant cascade each
//! `(block, modulus, level)` stream ends with a tail row at
//! `position = length of the level`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::PipelineError;
use crate::convcrypt::Bits;

/// Rows keyed by `(block, modulus, level)`.
pub(crate) type Lanes<'a> = BTreeMap<(usize, u64, usize), Vec<&'a FrameRow>>;

pub const CSV_HEADER: &str = "message_index,modulus,level,position,symbol_bits";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub index: usize,
    /// Plaintext values in the block before padding.
    pub len: usize,
    /// Power-of-two length after zero padding.
    pub padded: usize,
    /// `x div m_rsa` per value; the RSA layer only carries `x mod m_rsa`.
    pub wraps: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRow {
    pub message_index: usize,
    pub modulus: u64,
    pub level: usize,
    pub position: usize,
    pub bits: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameSet {
    pub blocks: Vec<BlockHeader>,
    pub rows: Vec<FrameRow>,
}

fn frame_err(line: usize, msg: impl std::fmt::Display) -> PipelineError {
    PipelineError::Frames(format!("line {line}: {msg}"))
}

impl FrameSet {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            let wraps: Vec<String> = b.wraps.iter().map(u64::to_string).collect();
            let _ = writeln!(
                out,
                "# block={} len={} padded={} wraps={}",
                b.index,
                b.len,
                b.padded,
                wraps.join(",")
            );
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.message_index, r.modulus, r.level, r.position, r.bits
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, PipelineError> {
        let mut fs = FrameSet::default();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if rest.trim_start().starts_with("block=") {
                    fs.blocks.push(parse_block_header(rest, lineno)?);
                }
                continue;
            }
            if !seen_header {
                if line != CSV_HEADER {
                    return Err(frame_err(lineno, format!("expected header {CSV_HEADER:?}")));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(frame_err(
                    lineno,
                    format!("expected 5 fields, found {}", f.len()),
                ));
            }
            let num = |idx: usize, name: &str| {
                f[idx]
                    .parse::<u64>()
                    .map_err(|_| frame_err(lineno, format!("{name} {:?} is not a number", f[idx])))
            };
            fs.rows.push(FrameRow {
                message_index: num(0, "message_index")? as usize,
                modulus: num(1, "modulus")?,
                level: num(2, "level")? as usize,
                position: num(3, "position")? as usize,
                bits: f[4].parse().map_err(|_| {
                    frame_err(
                        lineno,
                        format!("symbol_bits {:?} is not a bit string", f[4]),
                    )
                })?,
            });
        }
        if !seen_header {
            return Err(PipelineError::Frames("missing CSV header".into()));
        }
        Ok(fs)
    }

    /// Rows grouped per `(block, modulus, level)` and ordered by position.
    pub(crate) fn lanes(&self) -> Result<Lanes<'_>, PipelineError> {
        let mut lanes: Lanes<'_> = BTreeMap::new();
        for r in &self.rows {
            lanes
                .entry((r.message_index, r.modulus, r.level))
                .or_default()
                .push(r);
        }
        for ((b, m, l), rows) in lanes.iter_mut() {
            rows.sort_by_key(|r| r.position);
            for (i, r) in rows.iter().enumerate() {
                if r.position != i {
                    return Err(PipelineError::Frames(format!(
                        "block {b} modulus {m} level {l}: expected position {i}, found {}",
                        r.position
                    )));
                }
            }
        }
        Ok(lanes)
    }
}

fn parse_block_header(rest: &str, lineno: usize) -> Result<BlockHeader, PipelineError> {
    let mut index = None;
    let mut len = None;
    let mut padded = None;
    let mut wraps = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| frame_err(lineno, format!("bad header field {kv:?}")))?;
        let n = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| frame_err(lineno, format!("{k}: {v:?} is not a number")))
        };
        match k {
            "block" => index = Some(n(v)? as usize),
            "len" => len = Some(n(v)? as usize),
            "padded" => padded = Some(n(v)? as usize),
            "wraps" => {
                wraps = Some(if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(n).collect::<Result<Vec<_>, _>>()?
                })
            }
            other => return Err(frame_err(lineno, format!("unknown header field {other:?}"))),
        }
    }
    let need = |name: &str| frame_err(lineno, format!("block header lacks {name}"));
    let h = BlockHeader {
        index: index.ok_or_else(|| need("block"))?,
        len: len.ok_or_else(|| need("len"))?,
        padded: padded.ok_or_else(|| need("padded"))?,
        wraps: wraps.ok_or_else(|| need("wraps"))?,
    };
    if h.wraps.len() != h.len || h.len > h.padded || !h.padded.is_power_of_two() {
        return Err(frame_err(lineno, "inconsistent block header"));
    }
    Ok(h)
}
