//! Keyed nonlinear cascaded convolutional cipher.
//!
//! A cascade is a chain of finite-state transducers. Between consecutive
//! stages every output symbol goes through an S-box layer and then a P-box.
//! Transducers come either from explicit transition tables or from
//! state-selected GF(2) generator matrices with a keyed transition function.
//!
//! Bit order is MSB-first everywhere. Encoders carry per-stream state; use
//! one [`transducer::Encoder`] (or one call of [`cascade_encrypt`]) per stream.

mod bits;
mod boxes;
mod cascade;
mod gf2;
pub mod keyspace;
pub mod presets;
mod transducer;

use thiserror::Error;

pub use bits::Bits;
pub use boxes::{pbox_apply, sbox_apply, PBoxLayer, SBoxLayer};
pub use cascade::{cascade_decrypt, cascade_encrypt, CascadeKey, Interstage};
pub use gf2::Gf2Matrix;
pub use transducer::{
    compile_linear_transducer, encode_block, load_transducer_table, parse_table,
    transducer_from_rows, Encoder, LinearTransducer, TableRow, TableTransducer, Transducer,
    TransitionRule, MAX_STATES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptError {
    #[error("key validation failed: {0}")]
    KeyValidation(String),
    #[error("table validation failed: {0}")]
    TableValidation(String),
    #[error("length {len} is not a multiple of {unit}")]
    Length { len: usize, unit: usize },
    #[error("width mismatch: expected {expected} bits, got {got}")]
    Width { expected: usize, got: usize },
    #[error("stage {0} is not invertible; decode with the Viterbi decoder")]
    RequiresViterbi(usize),
    #[error("parse error: {0}")]
    Parse(String),
}
