//! Cross-layer link security simulation.
//!
//! Plaintext integers go through textbook RSA, are split into residues over a
//! coprime moduli set, decomposed per modulus with integer lifting, and every
//! subband symbol is enciphered by a keyed cascade of convolutional
//! transducers. The receiver reverses each step, using Viterbi decoding when
//! the cascade carries redundancy.

pub mod analysis;
pub mod convcrypt;
pub mod fixtures;
pub mod numtheory;
pub mod pipeline;
pub mod rns;
pub mod rsa;
pub mod signaling;
pub mod subband;
pub mod viterbi;

pub use convcrypt::{Bits, CascadeKey, Transducer};
pub use num_bigint::BigUint;
pub use pipeline::{FrameSet, KeyBundle};
pub use rns::{ModuliSet, ResidueVector};
pub use rsa::RsaKeyPair;
pub use subband::{LiftingKernel, SubbandFrame};
