use std::fmt;
use std::str::FromStr;

use super::CryptError;

/// An MSB-first bit sequence.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Concatenates `width`-bit symbols, most significant bit first.
    pub fn from_symbols(symbols: &[u32], width: usize) -> Self {
        let mut b = Self(Vec::with_capacity(symbols.len() * width));
        for &s in symbols {
            b.push_symbol(s, width);
        }
        b
    }

    pub fn push_symbol(&mut self, symbol: u32, width: usize) {
        for i in (0..width).rev() {
            self.0.push((symbol >> i) & 1 == 1);
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend(&mut self, other: &Bits) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn to_symbols(&self, width: usize) -> Result<Vec<u32>, CryptError> {
        if width == 0 || !self.0.len().is_multiple_of(width) {
            return Err(CryptError::Length {
                len: self.0.len(),
                unit: width,
            });
        }
        Ok(self
            .0
            .chunks(width)
            .map(|c| c.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
            .collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_vec())
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
            + self.0.len().abs_diff(other.0.len())
    }
}

impl FromStr for Bits {
    type Err = CryptError;

    /// Accepts `0`/`1` with optional whitespace or `_` separators.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() || c == '_' => {}
                other => {
                    return Err(CryptError::Parse(format!(
                        "unexpected character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(Self(bits))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

/// Parses a fixed-width binary field such as `"1010"`.
pub(crate) fn parse_field(s: &str) -> Result<(u32, usize), CryptError> {
    if s.is_empty() || s.len() > 32 || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(CryptError::Parse(format!("{s:?} is not a binary field")));
    }
    Ok((u32::from_str_radix(s, 2).expect("validated"), s.len()))
}

pub(crate) fn format_field(v: u32, width: usize) -> String {
    format!("{v:0width$b}")
}
