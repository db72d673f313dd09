use rand::seq::SliceRandom;
use rand::Rng;

use super::gf2::mask;
use super::CryptError;

/// Independent bijective substitutions on consecutive `width`-bit slices of a
/// symbol; box 0 handles the most significant slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SBoxLayer {
    width: usize,
    boxes: Vec<Vec<u32>>,
    inverses: Vec<Vec<u32>>,
}

impl SBoxLayer {
    pub fn new(width: usize, boxes: Vec<Vec<u32>>) -> Result<Self, CryptError> {
        if width == 0 || width > 16 || boxes.is_empty() {
            return Err(CryptError::KeyValidation(
                "s-box layer needs at least one box of width 1..=16".into(),
            ));
        }
        let size = 1usize << width;
        let mut inverses = Vec::with_capacity(boxes.len());
        for (i, b) in boxes.iter().enumerate() {
            if b.len() != size {
                return Err(CryptError::KeyValidation(format!(
                    "s-box {} has {} entries, expected {size}",
                    i + 1,
                    b.len()
                )));
            }
            let mut inv = vec![u32::MAX; size];
            for (x, &y) in b.iter().enumerate() {
                if y as usize >= size || inv[y as usize] != u32::MAX {
                    return Err(CryptError::KeyValidation(format!(
                        "s-box {} is not a bijection",
                        i + 1
                    )));
                }
                inv[y as usize] = x as u32;
            }
            inverses.push(inv);
        }
        Ok(Self {
            width,
            boxes,
            inverses,
        })
    }

    pub fn identity(width: usize, count: usize) -> Self {
        let b: Vec<u32> = (0..1u32 << width).collect();
        Self::new(width, vec![b; count]).expect("identity boxes are bijections")
    }

    pub fn random<R: Rng + ?Sized>(width: usize, count: usize, rng: &mut R) -> Self {
        let boxes = (0..count)
            .map(|_| {
                let mut b: Vec<u32> = (0..1u32 << width).collect();
                b.shuffle(rng);
                b
            })
            .collect();
        Self::new(width, boxes).expect("shuffles are bijections")
    }

    pub fn box_width(&self) -> usize {
        self.width
    }

    pub fn boxes(&self) -> &[Vec<u32>] {
        &self.boxes
    }

    /// Total symbol width covered by the layer.
    pub fn symbol_width(&self) -> usize {
        self.width * self.boxes.len()
    }

    pub fn apply(&self, symbol: u32, inverse: bool) -> u32 {
        let tables = if inverse { &self.inverses } else { &self.boxes };
        let count = tables.len();
        let mut out = 0;
        for (i, table) in tables.iter().enumerate() {
            let shift = (count - 1 - i) * self.width;
            let slice = (symbol >> shift) & mask(self.width);
            out |= table[slice as usize] << shift;
        }
        out
    }
}

/// Applies an S-box layer to a symbol given as a bit string of its own width.
pub fn sbox_apply(
    layer: &SBoxLayer,
    symbol: u32,
    width: usize,
    inverse: bool,
) -> Result<u32, CryptError> {
    if width != layer.symbol_width() {
        return Err(CryptError::Width {
            expected: layer.symbol_width(),
            got: width,
        });
    }
    Ok(layer.apply(symbol, inverse))
}

/// Bit-position permutation. Positions are 1-based with position 1 the most
/// significant bit; the bit at position `i` moves to `perm[i-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PBoxLayer {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl PBoxLayer {
    pub fn new(perm: Vec<usize>) -> Result<Self, CryptError> {
        let n = perm.len();
        if n == 0 || n > 32 {
            return Err(CryptError::KeyValidation(
                "p-box must permute 1..=32 positions".into(),
            ));
        }
        let mut inverse = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            if p == 0 || p > n || inverse[p - 1] != 0 {
                return Err(CryptError::KeyValidation(format!(
                    "p-box {perm:?} is not a permutation of 1..={n}"
                )));
            }
            inverse[p - 1] = i + 1;
        }
        Ok(Self { perm, inverse })
    }

    pub fn identity(width: usize) -> Self {
        Self::new((1..=width).collect()).expect("identity permutation")
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Self {
        let mut p: Vec<usize> = (1..=width).collect();
        p.shuffle(rng);
        Self::new(p).expect("shuffle is a permutation")
    }

    pub fn width(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply(&self, symbol: u32, inverse: bool) -> u32 {
        let map = if inverse { &self.inverse } else { &self.perm };
        let n = map.len();
        let mut out = 0;
        for (i, &dest) in map.iter().enumerate() {
            let bit = (symbol >> (n - 1 - i)) & 1;
            out |= bit << (n - dest);
        }
        out
    }
}

pub fn pbox_apply(
    layer: &PBoxLayer,
    symbol: u32,
    width: usize,
    inverse: bool,
) -> Result<u32, CryptError> {
    if width != layer.width() {
        return Err(CryptError::Width {
            expected: layer.width(),
            got: width,
        });
    }
    Ok(layer.apply(symbol, inverse))
}
