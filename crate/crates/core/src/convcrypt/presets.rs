//! Built-in cascade keys.
//!
//! * `demo8`: two (8,8,2) stages keyed by the two-set generator matrices,
//!   with the four 2-bit S-boxes and the reversing P-box between them.
//! * `fig4x23`: the two (4,2,3) worked-code tables joined by the 2-bit
//!   `x ⊕ 10` S-box and the bit-swap P-box.
//! * `fec`: worked-code stage 1, the same interstage keys, then a linear
//!   (5,2) stage whose `G0` spans a distance-3 block code.
//! * `identity`: a single pass-through stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::boxes::{PBoxLayer, SBoxLayer};
use super::cascade::{CascadeKey, Interstage};
use super::gf2::Gf2Matrix;
use super::transducer::{
    compile_linear_transducer, load_transducer_table, Transducer, TransitionRule,
};
use crate::fixtures::{CODE_STAGE1_TABLE, CODE_STAGE2_TABLE};

const DEMO8_G0: [&str; 8] = [
    "11000000", "01000000", "00100000", "00010000", "00001000", "00000100", "00000010", "00000001",
];
const DEMO8_G2: [&str; 8] = [
    "10000000", "01100000", "00110000", "00011000", "00001100", "00000110", "00000010", "00000001",
];

/// The state-1 generator set `[G0, G1, G2]` of the (8,8,2) key.
pub fn demo8_generators() -> Vec<Gf2Matrix> {
    vec![
        Gf2Matrix::from_rows(&DEMO8_G0).expect("static matrix"),
        Gf2Matrix::zeros(8, 8),
        Gf2Matrix::from_rows(&DEMO8_G2).expect("static matrix"),
    ]
}

/// Two-set keyed transition function: inputs `0..=7` keep the current set,
/// `8..=15` switch to the other one, everything above keeps the set.
pub fn demo8_rules() -> Vec<TransitionRule> {
    let mut rules = Vec::new();
    for (from, other) in [(0, 1), (1, 0)] {
        rules.push(TransitionRule {
            from,
            lo: 0,
            hi: 7,
            to: from,
        });
        rules.push(TransitionRule {
            from,
            lo: 8,
            hi: 15,
            to: other,
        });
        rules.push(TransitionRule {
            from,
            lo: 16,
            hi: 255,
            to: from,
        });
    }
    rules
}

pub fn demo8_stage() -> Transducer {
    let set1 = demo8_generators();
    let set2 = set1.iter().map(Gf2Matrix::transpose).collect();
    compile_linear_transducer(vec![set1, set2], demo8_rules()).expect("static key")
}

pub fn demo8_sboxes() -> SBoxLayer {
    SBoxLayer::new(
        2,
        vec![
            vec![0b00, 0b11, 0b10, 0b01],
            vec![0b01, 0b00, 0b11, 0b10],
            vec![0b10, 0b01, 0b00, 0b11],
            vec![0b11, 0b10, 0b01, 0b00],
        ],
    )
    .expect("static boxes")
}

pub fn demo8_pbox() -> PBoxLayer {
    PBoxLayer::new(vec![8, 7, 6, 5, 4, 3, 2, 1]).expect("static permutation")
}

/// `x ⊕ 10` on a 2-bit symbol.
pub fn code_sbox() -> SBoxLayer {
    SBoxLayer::new(2, vec![vec![0b10, 0b11, 0b00, 0b01]]).expect("static box")
}

/// Swaps the two bits of a 2-bit symbol.
pub fn code_pbox() -> PBoxLayer {
    PBoxLayer::new(vec![2, 1]).expect("static permutation")
}

fn code_interstage() -> Interstage {
    Interstage {
        sbox: code_sbox(),
        pbox: code_pbox(),
    }
}

pub fn code_stage1() -> Transducer {
    load_transducer_table(CODE_STAGE1_TABLE).expect("fixture table")
}

pub fn code_stage2() -> Transducer {
    load_transducer_table(CODE_STAGE2_TABLE).expect("fixture table")
}

pub fn demo8() -> CascadeKey {
    let layer = Interstage {
        sbox: demo8_sboxes(),
        pbox: demo8_pbox(),
    };
    CascadeKey::new(vec![demo8_stage(), demo8_stage()], vec![layer]).expect("static cascade")
}

pub fn fig4x23() -> CascadeKey {
    CascadeKey::new(vec![code_stage1(), code_stage2()], vec![code_interstage()])
        .expect("static cascade")
}

pub fn fec_stage() -> Transducer {
    let g0 = Gf2Matrix::from_rows(&["11100", "00111"]).expect("static matrix");
    let g1 = Gf2Matrix::from_rows(&["10010", "01001"]).expect("static matrix");
    compile_linear_transducer(
        vec![vec![g0, g1]],
        vec![TransitionRule {
            from: 0,
            lo: 0,
            hi: 3,
            to: 0,
        }],
    )
    .expect("static key")
}

pub fn fec() -> CascadeKey {
    CascadeKey::new(vec![code_stage1(), fec_stage()], vec![code_interstage()])
        .expect("static cascade")
}

pub fn identity(width: usize) -> CascadeKey {
    let t = compile_linear_transducer(
        vec![vec![Gf2Matrix::identity(width)]],
        vec![TransitionRule {
            from: 0,
            lo: 0,
            hi: (1u32 << width) - 1,
            to: 0,
        }],
    )
    .expect("identity key");
    CascadeKey::new(vec![t], vec![]).expect("single stage")
}

/// A seeded two-stage (8,8,2) rate-1 cascade. Each stage switches between
/// two generator sets on a random input partition.
pub fn random(seed: u64) -> CascadeKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = vec![random_stage(&mut rng), random_stage(&mut rng)];
    let layer = Interstage {
        sbox: SBoxLayer::random(2, 4, &mut rng),
        pbox: PBoxLayer::random(8, &mut rng),
    };
    CascadeKey::new(stages, vec![layer]).expect("generated keys validate")
}

fn random_stage<R: Rng + ?Sized>(rng: &mut R) -> Transducer {
    const SETS: usize = 2;
    let sets: Vec<Vec<Gf2Matrix>> = (0..SETS)
        .map(|_| {
            vec![
                Gf2Matrix::random_invertible(8, rng),
                Gf2Matrix::random(8, 8, rng),
                Gf2Matrix::random(8, 8, rng),
            ]
        })
        .collect();
    let mut rules = Vec::new();
    for from in 0..SETS {
        let mut cuts: Vec<u32> = (0..rng.random_range(1..4))
            .map(|_| rng.random_range(1..256))
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut lo = 0;
        for hi in cuts.into_iter().map(|c| c - 1).chain([255]) {
            rules.push(TransitionRule {
                from,
                lo,
                hi,
                to: rng.random_range(0..SETS),
            });
            lo = hi + 1;
        }
    }
    compile_linear_transducer(sets, rules).expect("generated keys validate")
}
