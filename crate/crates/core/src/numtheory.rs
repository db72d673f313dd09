//! Exact modular arithmetic on arbitrary-precision unsigned integers.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("invalid modulus {0}: must be at least 2")]
    InvalidModulus(BigUint),
    #[error("{a} has no inverse modulo {modulus}")]
    NoInverse { a: BigUint, modulus: BigUint },
}

fn check_modulus(modulus: &BigUint) -> Result<(), NumError> {
    if *modulus < BigUint::from(2u32) {
        return Err(NumError::InvalidModulus(modulus.clone()));
    }
    Ok(())
}

/// `base^exponent mod modulus` by left-to-right square-and-multiply.
pub fn mod_pow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint, NumError> {
    check_modulus(modulus)?;
    let base = base % modulus;
    let mut acc = BigUint::one();
    for i in (0..exponent.bits()).rev() {
        acc = (&acc * &acc) % modulus;
        if exponent.bit(i) {
            acc = (&acc * &base) % modulus;
        }
    }
    Ok(acc)
}

/// Multiplicative inverse of `a` modulo `modulus` via the extended Euclidean
/// algorithm. The result lies in `[1, modulus)`.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint, NumError> {
    check_modulus(modulus)?;
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let (mut r0, mut r1) = (m.clone(), BigInt::from_biguint(Sign::Plus, a % modulus));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if !r0.is_one() {
        return Err(NumError::NoInverse {
            a: a.clone(),
            modulus: modulus.clone(),
        });
    }
    Ok(t0
        .mod_floor(&m)
        .to_biguint()
        .expect("non-negative after mod_floor"))
}

/// `x mod n` without division.
///
/// With `b` the bit length of `n`, the identity `2^b ≡ 2^b - n (mod n)` lets
/// the high part of `x` be folded into the low part:
/// `x <- (x mod 2^b) + (2^b - n) * (x >> b)`, repeated until `x < 2^b`,
/// followed by at most one subtraction of `n`.
pub fn reduce_by_bitwidth(x: &BigUint, n: &BigUint) -> Result<BigUint, NumError> {
    check_modulus(n)?;
    let width = n.bits();
    let base = BigUint::one() << width;
    let fold = &base - n;
    let mask = &base - BigUint::one();
    let mut x = x.clone();
    while x >= base {
        let high = &x >> width;
        x = (&x & &mask) + &fold * high;
    }
    // x < 2^b <= 2n
    if x >= *n {
        x -= n;
    }
    Ok(x)
}

pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

const TRIAL_DIVISION_LIMIT: u64 = 1 << 32;
const MILLER_RABIN_ROUNDS: usize = 64;
const MILLER_RABIN_SEED: u64 = 0x5253_415f_4d52_3634;

/// Deterministic trial division below 2^32; 64 Miller-Rabin rounds with a
/// fixed-seed witness stream above.
pub fn is_prime(n: &BigUint) -> bool {
    match n.to_u64() {
        Some(v) if v < TRIAL_DIVISION_LIMIT => is_prime_small(v),
        _ => miller_rabin(n),
    }
}

fn is_prime_small(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Uniform value in `[0, bound)` by rejection sampling on random bytes.
fn random_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let mut buf = vec![0u8; bits.div_ceil(8) as usize];
    loop {
        rng.fill_bytes(&mut buf);
        let excess = buf.len() as u64 * 8 - bits;
        buf[0] &= 0xff >> excess;
        let v = BigUint::from_bytes_be(&buf);
        if &v < bound {
            return v;
        }
    }
}

fn miller_rabin(n: &BigUint) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if n.is_even() {
        return false;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut rng = ChaCha8Rng::seed_from_u64(MILLER_RABIN_SEED);
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = random_below(&mut rng, &(&n_minus_1 - &two)) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
