//! End-to-end link: RSA → residues → per-modulus subband decomposition →
//! cascade cipher → channel, and back.
//!
//! Plaintext is cut into blocks of `block_len` values (the last block is
//! zero padded to a power of two). Per block every value is split as
//! `x = w·m_rsa + r`; `r` goes through RSA and `w` travels in the block
//! header. The RSA outputs are mapped to residues, each modulus gets its own
//! subband decomposition, and every `(block, modulus, level)` symbol stream is
//! enciphered from reset cascade states. Non-invertible cascades get a zero
//! tail per stream and are decoded with the joint Viterbi decoder.

mod bundle;
mod frames;
pub mod golden;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use bundle::{
    cascade_preset, load_bundle, save_bundle, BundleError, KeyBundle, SignalingConfig,
    CASCADE_PRESETS, FORMAT_VERSION,
};
pub use frames::{BlockHeader, FrameRow, FrameSet, CSV_HEADER};

use crate::convcrypt::{cascade_decrypt, cascade_encrypt, Bits, CryptError};
use crate::rns::{ResidueVector, RnsError};
use crate::rsa::{decrypt_value, encrypt_value, RsaError};
use crate::signaling::{
    demodulate_symbol, modulate_symbol, sylvester_hadamard, Channel, ChannelModel, HadamardMatrix,
    SignalError,
};
use crate::subband::{decompose, reconstruct, SubbandError, SubbandFrame};
use crate::viterbi::{append_tail, CascadeDecoder, ViterbiError};

/// Residue symbols are one byte wide.
pub const SYMBOL_BITS: usize = 8;

pub const DEFAULT_BLOCK_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input: {0}")]
    Input(String),
    #[error("rsa stage: {0}")]
    Rsa(#[from] RsaError),
    #[error("rns stage: {0}")]
    Rns(#[from] RnsError),
    #[error("subband stage: {0}")]
    Subband(#[from] SubbandError),
    #[error("cascade stage: {0}")]
    Cascade(#[from] CryptError),
    #[error("viterbi stage: {0}")]
    Viterbi(#[from] ViterbiError),
    #[error("signaling stage: {0}")]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("frame set: {0}")]
    Frames(String),
    #[error("decode stage: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncryptOptions {
    /// Values per message block; a power of two.
    pub block_len: usize,
}

impl Default for EncryptOptions {
    fn default() -> Self {
        Self {
            block_len: DEFAULT_BLOCK_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecryptOptions {
    pub channel: Option<ChannelModel>,
    /// Reduce out-of-range symbols and ciphertexts instead of failing, so a
    /// noisy link still yields (possibly wrong) values.
    pub tolerant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecryptReport {
    pub values: Vec<BigUint>,
    /// Symbol bits changed by the channel.
    pub channel_flips: usize,
    /// Decoded symbols outside their residue ring (tolerant mode only).
    pub symbol_faults: usize,
    /// Reconstructed ciphertexts not below the RSA modulus (tolerant mode only).
    pub range_faults: usize,
}

/// Intermediate values of one block, exposed for checks against worked data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTrace {
    pub rsa_layer: Vec<BigUint>,
    pub frames: Vec<SubbandFrame>,
}

fn lane_symbols(frame: &SubbandFrame, level: usize) -> Vec<u64> {
    match level {
        0 => vec![frame.final_approx],
        l => frame.levels[l - 1].clone(),
    }
}

/// RSA layer and subband frames of one block of plaintext.
pub fn trace_block(
    kb: &KeyBundle,
    values: &[BigUint],
) -> Result<(BlockTrace, Vec<u64>, usize), PipelineError> {
    if values.is_empty() {
        return Err(PipelineError::Input("empty block".into()));
    }
    let padded = values.len().next_power_of_two();
    let pk = kb.rsa.public();
    let mut rsa_layer = Vec::with_capacity(padded);
    let mut wraps = Vec::with_capacity(values.len());
    for (i, x) in values
        .iter()
        .chain(std::iter::repeat(&BigUint::ZERO))
        .take(padded)
        .enumerate()
    {
        let (w, r) = x.div_rem(&kb.rsa.m);
        if i < values.len() {
            wraps.push(w.to_u64().ok_or_else(|| {
                PipelineError::Input(format!("value {x} is too large for the RSA modulus"))
            })?);
        }
        rsa_layer.push(encrypt_value(&pk, &r)?);
    }
    let residues: Vec<ResidueVector> = rsa_layer
        .iter()
        .map(|c| kb.moduli.to_residues(c))
        .collect::<Result<_, _>>()?;
    let frames = kb
        .moduli
        .moduli()
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let seq: Vec<u64> = residues.iter().map(|r| r.values[j]).collect();
            decompose(&seq, &kb.kernel, m)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((BlockTrace { rsa_layer, frames }, wraps, padded))
}

pub fn encrypt_pipeline(
    kb: &KeyBundle,
    plaintext: &[BigUint],
    opts: EncryptOptions,
) -> Result<FrameSet, PipelineError> {
    if plaintext.is_empty() {
        return Err(PipelineError::Input("plaintext is empty".into()));
    }
    if !opts.block_len.is_power_of_two() {
        return Err(PipelineError::Input(format!(
            "block length {} is not a power of two",
            opts.block_len
        )));
    }
    let key = &kb.cascade;
    let redundant = !key.is_invertible();
    let per_symbol = SYMBOL_BITS / key.input_width() * key.output_width();
    let mut fs = FrameSet::default();
    for (b, chunk) in plaintext.chunks(opts.block_len).enumerate() {
        let (trace, wraps, padded) = trace_block(kb, chunk)?;
        fs.blocks.push(BlockHeader {
            index: b,
            len: chunk.len(),
            padded,
            wraps,
        });
        for frame in &trace.frames {
            for level in 0..=frame.depth() {
                let symbols: Vec<u32> = lane_symbols(frame, level)
                    .iter()
                    .map(|&v| v as u32)
                    .collect();
                let mut input = Bits::from_symbols(&symbols, SYMBOL_BITS);
                if redundant {
                    input = append_tail(key, &input)?;
                }
                let out = cascade_encrypt(key, &input)?;
                let mut pos = 0;
                let mut position = 0;
                while pos < out.len() {
                    let end = (pos + per_symbol).min(out.len());
                    fs.rows.push(FrameRow {
                        message_index: b,
                        modulus: frame.modulus,
                        level,
                        position,
                        bits: out.slice(pos, end),
                    });
                    pos = end;
                    position += 1;
                }
            }
        }
    }
    Ok(fs)
}

/// Channel applied to one lane, either directly on bits or on Walsh chips.
fn transmit(
    bits: &Bits,
    ch: &mut Channel,
    walsh: Option<&HadamardMatrix>,
) -> Result<Bits, PipelineError> {
    let Some(h) = walsh else {
        return Ok(ch.transmit_bits(bits));
    };
    let mut padded = bits.clone();
    padded.extend(&Bits::zeros(
        (SYMBOL_BITS - bits.len() % SYMBOL_BITS) % SYMBOL_BITS,
    ));
    let mut out = Bits::new();
    for byte in padded.to_symbols(SYMBOL_BITS)? {
        let chips = ch.transmit_chips(&modulate_symbol(h, byte as i32 - 128)?);
        out.push_symbol((demodulate_symbol(h, &chips)? + 128) as u32, SYMBOL_BITS);
    }
    out.truncate(bits.len());
    Ok(out)
}

pub fn decrypt_pipeline(
    kb: &KeyBundle,
    frames: &FrameSet,
    opts: DecryptOptions,
) -> Result<DecryptReport, PipelineError> {
    let key = &kb.cascade;
    let decoder = if key.is_invertible() {
        None
    } else {
        Some(CascadeDecoder::new(key)?)
    };
    let per_symbol = SYMBOL_BITS / key.input_width() * key.output_width();
    let tail_bits = decoder
        .as_ref()
        .map_or(0, |d| d.tail_steps() * key.output_width());
    let walsh = if kb.signaling.walsh {
        Some(sylvester_hadamard(kb.signaling.hadamard_log2)?)
    } else {
        None
    };
    let lanes = frames.lanes()?;
    let mut report = DecryptReport {
        values: Vec::new(),
        channel_flips: 0,
        symbol_faults: 0,
        range_faults: 0,
    };
    let mut stream = 0u64;
    let sk = kb.rsa.private();
    let mut blocks: Vec<&BlockHeader> = frames.blocks.iter().collect();
    blocks.sort_by_key(|b| b.index);
    for (i, b) in blocks.iter().enumerate() {
        if b.index != i {
            return Err(PipelineError::Frames(format!("block {i} header missing")));
        }
    }
    if let Some(&(blk, _, _)) = lanes.keys().find(|(blk, _, _)| *blk >= blocks.len()) {
        return Err(PipelineError::Frames(format!(
            "rows for block {blk} have no header"
        )));
    }
    for b in blocks {
        let depth = b.padded.trailing_zeros() as usize;
        let mut frames_out = Vec::with_capacity(kb.moduli.len());
        for &m in kb.moduli.moduli() {
            let mut levels = vec![Vec::new(); depth];
            let mut final_approx = 0;
            for level in 0..=depth {
                let count = if level == 0 { 1 } else { b.padded >> level };
                let name = format!("block {} modulus {m} level {level}", b.index);
                let rows = lanes
                    .get(&(b.index, m, level))
                    .ok_or_else(|| PipelineError::Frames(format!("{name}: no rows")))?;
                let expect_rows = count + usize::from(decoder.is_some());
                if rows.len() != expect_rows {
                    return Err(PipelineError::Frames(format!(
                        "{name}: {} rows, expected {expect_rows}",
                        rows.len()
                    )));
                }
                let mut lane = Bits::new();
                for (i, r) in rows.iter().enumerate() {
                    let want = if i < count { per_symbol } else { tail_bits };
                    if r.bits.len() != want {
                        return Err(PipelineError::Frames(format!(
                            "{name} position {i}: {} bits, expected {want}",
                            r.bits.len()
                        )));
                    }
                    lane.extend(&r.bits);
                }
                if let Some(ch) = opts.channel {
                    let received = transmit(&lane, &mut ch.channel(stream), walsh.as_ref())?;
                    report.channel_flips += received.hamming(&lane);
                    lane = received;
                }
                stream += 1;
                let plain = match &decoder {
                    Some(d) => d.decode(&lane)?.message,
                    None => cascade_decrypt(key, &lane)?,
                };
                let mut symbols = Vec::with_capacity(count);
                for v in plain.to_symbols(SYMBOL_BITS)? {
                    let v = v as u64;
                    if v >= m {
                        if !opts.tolerant {
                            return Err(PipelineError::Decode(format!(
                                "{name}: symbol {v} is outside Z_{m}"
                            )));
                        }
                        report.symbol_faults += 1;
                    }
                    symbols.push(v % m);
                }
                match level {
                    0 => final_approx = symbols[0],
                    l => levels[l - 1] = symbols,
                }
            }
            frames_out.push(reconstruct(&SubbandFrame {
                modulus: m,
                kernel: kb.kernel,
                levels,
                final_approx,
            })?);
        }
        for i in 0..b.len {
            let residues = ResidueVector::new(frames_out.iter().map(|f| f[i]).collect());
            let mut c = kb.moduli.from_residues(&residues)?;
            if c >= kb.rsa.m {
                if !opts.tolerant {
                    return Err(PipelineError::Decode(format!(
                        "block {} value {i}: ciphertext {c} is not below the RSA modulus {}",
                        b.index, kb.rsa.m
                    )));
                }
                report.range_faults += 1;
                c %= &kb.rsa.m;
            }
            let r = decrypt_value(&sk, &c)?;
            report
                .values
                .push(BigUint::from(b.wraps[i]) * &kb.rsa.m + r);
        }
    }
    Ok(report)
}

/// One decimal integer per line; blank lines and `#` comments are skipped.
pub fn parse_plaintext(text: &str) -> Result<Vec<BigUint>, PipelineError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|_| {
            PipelineError::Input(format!(
                "line {}: {line:?} is not a non-negative integer",
                i + 1
            ))
        })?);
    }
    Ok(out)
}

pub fn format_values(values: &[BigUint]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcrypt::presets;
    use crate::fixtures::*;
    use crate::rns::ModuliSet;
    use crate::rsa::RsaKeyPair;
    use crate::subband::{ring, LiftingKernel};

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn worked_block_trace() {
        let kb = KeyBundle::worked(presets::demo8());
        let (trace, wraps, padded) = trace_block(&kb, &big(&WORKED_PLAINTEXT)).unwrap();
        assert_eq!(trace.rsa_layer, big(&WORKED_CIPHERTEXT));
        assert_eq!(wraps, vec![0, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(padded, 8);
        for (frame, want) in trace.frames.iter().zip(WORKED_LEVEL1_DETAILS) {
            let want: Vec<u64> = want.iter().map(|&v| ring(v, frame.modulus)).collect();
            assert_eq!(frame.levels[0], want);
        }
    }

    #[test]
    fn worked_roundtrip_every_preset() {
        for name in CASCADE_PRESETS {
            let kb = KeyBundle::worked(cascade_preset(name, 5).unwrap());
            let fs =
                encrypt_pipeline(&kb, &big(&WORKED_PLAINTEXT), EncryptOptions::default()).unwrap();
            let back = FrameSet::from_csv(&fs.to_csv()).unwrap();
            let out = decrypt_pipeline(&kb, &back, DecryptOptions::default()).unwrap();
            assert_eq!(out.values, big(&WORKED_PLAINTEXT), "{name}");
        }
    }

    #[test]
    fn identity_single_modulus_zeros() {
        let kb = KeyBundle::new(
            RsaKeyPair::from_u64(13, 17, 5).unwrap(),
            ModuliSet::new(&[251]).unwrap(),
            LiftingKernel::new([2, 0, 0]).unwrap(),
            presets::identity(8),
            SignalingConfig::default(),
        )
        .unwrap();
        let fs = encrypt_pipeline(&kb, &big(&[0; 4]), EncryptOptions::default()).unwrap();
        assert!(fs.rows.iter().all(|r| r.bits == Bits::zeros(8)));
        let out = decrypt_pipeline(&kb, &fs, DecryptOptions::default()).unwrap();
        assert_eq!(out.values, big(&[0; 4]));
    }

    #[test]
    fn padding_and_multiple_blocks() {
        let kb = KeyBundle::worked(presets::fig4x23());
        let values = big(&[5, 480, 481, 1000, 7, 9, 11, 13, 15, 17, 19]);
        let fs = encrypt_pipeline(&kb, &values, EncryptOptions { block_len: 4 }).unwrap();
        assert_eq!(fs.blocks.len(), 3);
        assert_eq!((fs.blocks[2].len, fs.blocks[2].padded), (3, 4));
        let out = decrypt_pipeline(&kb, &fs, DecryptOptions::default()).unwrap();
        assert_eq!(out.values, values);
        assert!(encrypt_pipeline(&kb, &values, EncryptOptions { block_len: 6 }).is_err());
        assert!(encrypt_pipeline(&kb, &[], EncryptOptions::default()).is_err());
    }

    #[test]
    fn incomplete_frames_are_named() {
        let kb = KeyBundle::worked(presets::demo8());
        let mut fs =
            encrypt_pipeline(&kb, &big(&WORKED_PLAINTEXT), EncryptOptions::default()).unwrap();
        fs.rows.retain(|r| !(r.modulus == 109 && r.level == 2));
        let err = decrypt_pipeline(&kb, &fs, DecryptOptions::default()).unwrap_err();
        assert!(err.to_string().contains("modulus 109 level 2"), "{err}");
    }

    #[test]
    fn single_flip_per_stream_is_corrected() {
        let kb = KeyBundle::worked(presets::fec());
        let mut fs =
            encrypt_pipeline(&kb, &big(&WORKED_PLAINTEXT), EncryptOptions::default()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for (i, r) in fs.rows.iter_mut().enumerate() {
            if seen.insert((r.message_index, r.modulus, r.level)) {
                let at = i % r.bits.len();
                r.bits.flip(at);
            }
        }
        let out = decrypt_pipeline(&kb, &fs, DecryptOptions::default()).unwrap();
        assert_eq!(out.values, big(&WORKED_PLAINTEXT));
    }

    #[test]
    fn noisy_channel_is_deterministic() {
        let kb = KeyBundle::worked(presets::demo8());
        let fs = encrypt_pipeline(&kb, &big(&WORKED_PLAINTEXT), EncryptOptions::default()).unwrap();
        let opts = DecryptOptions {
            channel: Some(ChannelModel::new(0.05, 9).unwrap()),
            tolerant: true,
        };
        let a = decrypt_pipeline(&kb, &fs, opts).unwrap();
        let b = decrypt_pipeline(&kb, &fs, opts).unwrap();
        assert_eq!(a, b);
        assert!(a.channel_flips > 0);
        let clean = DecryptOptions {
            channel: Some(ChannelModel::new(0.0, 9).unwrap()),
            tolerant: false,
        };
        assert_eq!(
            decrypt_pipeline(&kb, &fs, clean).unwrap().values,
            big(&WORKED_PLAINTEXT)
        );
    }

    #[test]
    fn walsh_spreading_absorbs_chip_errors() {
        let mut kb = KeyBundle::worked(presets::demo8());
        kb.signaling.walsh = true;
        let fs = encrypt_pipeline(&kb, &big(&WORKED_PLAINTEXT), EncryptOptions::default()).unwrap();
        let opts = DecryptOptions {
            channel: Some(ChannelModel::new(0.05, 1).unwrap()),
            tolerant: false,
        };
        let out = decrypt_pipeline(&kb, &fs, opts).unwrap();
        assert_eq!(out.values, big(&WORKED_PLAINTEXT));
        assert_eq!(out.channel_flips, 0);
    }

    #[test]
    fn plaintext_parsing() {
        assert_eq!(
            parse_plaintext("1\n\n# c\n 22 # x\n").unwrap(),
            big(&[1, 22])
        );
        assert!(parse_plaintext("1\n-2\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert_eq!(format_values(&big(&[3, 4])), "3\n4\n");
    }
}
