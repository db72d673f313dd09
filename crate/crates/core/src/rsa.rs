//! Textbook RSA over integers: no padding, values must already be `< m`.
//!
//! This layer exists to carry the key-distribution role in the simulated
//! link; it is not secure on its own and should never be used as such.

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::numtheory::{self, NumError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RsaError {
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("primes must be distinct")]
    EqualPrimes,
    #[error("public exponent {e} is not invertible modulo (p-1)(q-1) = {phi}")]
    InvalidExponent { e: BigUint, phi: BigUint },
    #[error("value {value} does not fit below modulus {modulus}")]
    MessageTooLarge { value: BigUint, modulus: BigUint },
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub modulus: BigUint,
    pub exponent: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    pub modulus: BigUint,
    pub exponent: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKeyPair {
    pub p: BigUint,
    pub q: BigUint,
    pub m: BigUint,
    pub e: BigUint,
    pub d: BigUint,
}

impl RsaKeyPair {
    /// Derives `m = pq` and the least positive `d` with `e·d ≡ 1 (mod (p-1)(q-1))`.
    pub fn derive(p: BigUint, q: BigUint, e: BigUint) -> Result<Self, RsaError> {
        for v in [&p, &q] {
            if !numtheory::is_prime(v) {
                return Err(RsaError::NotPrime(v.clone()));
            }
        }
        if p == q {
            return Err(RsaError::EqualPrimes);
        }
        let phi = (&p - 1u32) * (&q - 1u32);
        let d = numtheory::mod_inv(&e, &phi).map_err(|_| RsaError::InvalidExponent {
            e: e.clone(),
            phi: phi.clone(),
        })?;
        let m = &p * &q;
        Ok(Self { p, q, m, e, d })
    }

    pub fn from_u64(p: u64, q: u64, e: u64) -> Result<Self, RsaError> {
        Self::derive(p.into(), q.into(), e.into())
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            modulus: self.m.clone(),
            exponent: self.e.clone(),
        }
    }

    pub fn private(&self) -> PrivateKey {
        PrivateKey {
            modulus: self.m.clone(),
            exponent: self.d.clone(),
        }
    }

    pub fn phi(&self) -> BigUint {
        (&self.p - BigUint::one()) * (&self.q - BigUint::one())
    }
}

fn apply(value: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint, RsaError> {
    if value >= modulus {
        return Err(RsaError::MessageTooLarge {
            value: value.clone(),
            modulus: modulus.clone(),
        });
    }
    Ok(numtheory::mod_pow(value, exponent, modulus)?)
}

/// `x^e mod m`.
pub fn encrypt_value(pk: &PublicKey, x: &BigUint) -> Result<BigUint, RsaError> {
    apply(x, &pk.exponent, &pk.modulus)
}

/// `c^d mod m`. The same primitive produces signatures.
pub fn decrypt_value(sk: &PrivateKey, c: &BigUint) -> Result<BigUint, RsaError> {
    apply(c, &sk.exponent, &sk.modulus)
}

pub fn sign_value(sk: &PrivateKey, x: &BigUint) -> Result<BigUint, RsaError> {
    decrypt_value(sk, x)
}

pub fn verify_signature(
    pk: &PublicKey,
    x: &BigUint,
    signature: &BigUint,
) -> Result<bool, RsaError> {
    Ok(encrypt_value(pk, signature)? == *x)
}
