//! Walsh–Hadamard orthogonal signaling and a binary symmetric channel.
//!
//! Channel randomness comes from ChaCha8 seeded with `seed_from_u64`; the
//! stream id selects an independent keystream so per-trial channels are
//! reproducible regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::convcrypt::Bits;

pub const MAX_HADAMARD_LOG2: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("hadamard order 2^{0} exceeds the cap 2^{MAX_HADAMARD_LOG2}")]
    SizeCap(u32),
    #[error("value {0} outside [-128, 127]")]
    Range(i32),
    #[error("expected {expected} chips, got {got}")]
    Length { expected: usize, got: usize },
    #[error("symbol mapping needs order 256, matrix has order {0}")]
    Order(usize),
    #[error("flip probability {0} outside [0, 1]")]
    Probability(f64),
}

/// Square ±1 matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.order + j]
    }

    /// Exact check of `H·Hᵀ = order·I`.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.order;
        (0..n).all(|i| {
            (i..n).all(|j| {
                let dot: i64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(&a, &b)| (a * b) as i64)
                    .sum();
                dot == if i == j { n as i64 } else { 0 }
            })
        })
    }
}

/// `H_{2^t}` by Sylvester doubling from `H_1 = [+1]`.
pub fn sylvester_hadamard(t: u32) -> Result<HadamardMatrix, SignalError> {
    if t > MAX_HADAMARD_LOG2 {
        return Err(SignalError::SizeCap(t));
    }
    let mut order = 1;
    let mut entries = vec![1i8];
    for _ in 0..t {
        let next = order * 2;
        let mut grown = vec![0i8; next * next];
        for i in 0..order {
            for j in 0..order {
                let v = entries[i * order + j];
                grown[i * next + j] = v;
                grown[i * next + j + order] = v;
                grown[(i + order) * next + j] = v;
                grown[(i + order) * next + j + order] = -v;
            }
        }
        order = next;
        entries = grown;
    }
    Ok(HadamardMatrix { order, entries })
}

/// Row `value + 128` of `H_256`.
pub fn modulate_symbol(h: &HadamardMatrix, value: i32) -> Result<Vec<i8>, SignalError> {
    if h.order != 256 {
        return Err(SignalError::Order(h.order));
    }
    if !(-128..=127).contains(&value) {
        return Err(SignalError::Range(value));
    }
    Ok(h.row((value + 128) as usize).to_vec())
}

/// Row index of maximum correlation with `chips`, ties to the lowest index.
/// Correlations with every row come from one fast Walsh–Hadamard transform.
pub fn correlate_argmax(h: &HadamardMatrix, chips: &[i8]) -> Result<usize, SignalError> {
    if chips.len() != h.order {
        return Err(SignalError::Length {
            expected: h.order,
            got: chips.len(),
        });
    }
    let corr = fwht(chips);
    let mut best = 0;
    for (i, &c) in corr.iter().enumerate() {
        if c > corr[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn demodulate_symbol(h: &HadamardMatrix, chips: &[i8]) -> Result<i32, SignalError> {
    if h.order != 256 {
        return Err(SignalError::Order(h.order));
    }
    Ok(correlate_argmax(h, chips)? as i32 - 128)
}

/// Unnormalized transform in Sylvester (natural) order: entry `i` equals
/// the dot product with row `i`.
fn fwht(chips: &[i8]) -> Vec<i32> {
    let mut a: Vec<i32> = chips.iter().map(|&c| c as i32).collect();
    let mut h = 1;
    while h < a.len() {
        for i in (0..a.len()).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (a[j], a[j + h]);
                a[j] = x + y;
                a[j + h] = x - y;
            }
        }
        h *= 2;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pe: f64,
    seed: u64,
}

impl ChannelModel {
    pub fn new(pe: f64, seed: u64) -> Result<Self, SignalError> {
        if !(0.0..=1.0).contains(&pe) {
            return Err(SignalError::Probability(pe));
        }
        Ok(Self { pe, seed })
    }

    pub fn pe(&self) -> f64 {
        self.pe
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent channel realization number `stream`.
    pub fn channel(&self, stream: u64) -> Channel {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        Channel { pe: self.pe, rng }
    }
}

/// Stateful BSC realization.
#[derive(Debug, Clone)]
pub struct Channel {
    pe: f64,
    rng: ChaCha8Rng,
}

impl Channel {
    /// Draws one flip decision.
    pub fn flip(&mut self) -> bool {
        self.rng.random_bool(self.pe)
    }

    pub fn transmit_bits(&mut self, bits: &Bits) -> Bits {
        let mut out = bits.clone();
        for b in out.as_mut_slice() {
            *b ^= self.flip();
        }
        out
    }

    pub fn transmit_chips(&mut self, chips: &[i8]) -> Vec<i8> {
        chips
            .iter()
            .map(|&c| if self.flip() { -c } else { c })
            .collect()
    }
}

/// Passes bits through stream 0 of the channel.
pub fn bsc_transmit(ch: &ChannelModel, bits: &Bits) -> Bits {
    ch.channel(0).transmit_bits(bits)
}

pub fn bsc_transmit_chips(ch: &ChannelModel, chips: &[i8]) -> Vec<i8> {
    ch.channel(0).transmit_chips(chips)
}
