//! Residue number system: decomposition over a pairwise-coprime moduli set
//! and reconstruction with the Chinese remainder theorem.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::numtheory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RnsError {
    #[error("moduli set is empty")]
    Empty,
    #[error("modulus {0} is below 2")]
    ModulusTooSmall(u64),
    #[error("moduli {a} and {b} are not coprime")]
    NotCoprime { a: u64, b: u64 },
    #[error("{value} is outside the dynamic range [0, {range})")]
    OutOfRange { value: BigUint, range: BigUint },
    #[error("malformed residue vector: {0}")]
    Malformed(String),
}

/// Pairwise-coprime moduli with the CRT constants precomputed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuliSet {
    moduli: Vec<u64>,
    range: BigUint,
    cofactors: Vec<BigUint>,
    inverses: Vec<u64>,
}

impl ModuliSet {
    pub fn new(moduli: &[u64]) -> Result<Self, RnsError> {
        if moduli.is_empty() {
            return Err(RnsError::Empty);
        }
        for (i, &a) in moduli.iter().enumerate() {
            if a < 2 {
                return Err(RnsError::ModulusTooSmall(a));
            }
            for &b in &moduli[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(RnsError::NotCoprime { a, b });
                }
            }
        }
        let range: BigUint = moduli.iter().map(|&m| BigUint::from(m)).product();
        let cofactors: Vec<BigUint> = moduli.iter().map(|&m| &range / m).collect();
        let inverses = moduli
            .iter()
            .zip(&cofactors)
            .map(|(&m, mhat)| {
                let inv = numtheory::mod_inv(mhat, &m.into()).expect("coprime by construction");
                inv.to_u64().expect("inverse below a u64 modulus")
            })
            .collect();
        Ok(Self {
            moduli: moduli.to_vec(),
            range,
            cofactors,
            inverses,
        })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// Product of all moduli; the dynamic range is `[0, range)`.
    pub fn range(&self) -> &BigUint {
        &self.range
    }

    /// `M / m_j` for each modulus.
    pub fn cofactors(&self) -> &[BigUint] {
        &self.cofactors
    }

    /// `T_j` with `(M / m_j) · T_j ≡ 1 (mod m_j)`.
    pub fn inverses(&self) -> &[u64] {
        &self.inverses
    }

    pub fn to_residues(&self, x: &BigUint) -> Result<ResidueVector, RnsError> {
        if *x >= self.range {
            return Err(RnsError::OutOfRange {
                value: x.clone(),
                range: self.range.clone(),
            });
        }
        let values = self
            .moduli
            .iter()
            .map(|&m| (x % m).to_u64().expect("remainder below a u64 modulus"))
            .collect();
        Ok(ResidueVector { values })
    }

    /// `(Σ_j (M/m_j) · T_j · x_j) mod M`.
    pub fn from_residues(&self, r: &ResidueVector) -> Result<BigUint, RnsError> {
        if r.values.len() != self.moduli.len() {
            return Err(RnsError::Malformed(format!(
                "{} residues for {} moduli",
                r.values.len(),
                self.moduli.len()
            )));
        }
        let mut acc = BigUint::zero();
        for (j, (&x, &m)) in r.values.iter().zip(&self.moduli).enumerate() {
            if x >= m {
                return Err(RnsError::Malformed(format!(
                    "residue {x} not below modulus {m}"
                )));
            }
            acc += &self.cofactors[j] * (self.inverses[j] as u128 * x as u128 % m as u128);
        }
        Ok(acc % &self.range)
    }
}

/// Per-modulus remainders of one integer, aligned with a [`ModuliSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueVector {
    pub values: Vec<u64>,
}

impl ResidueVector {
    pub fn new(values: Vec<u64>) -> Self {
        Self { values }
    }
}
