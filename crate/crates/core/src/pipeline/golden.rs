//! Worked vectors checked by `verify` and the acceptance suite.

use num_bigint::BigUint;

use super::{
    decrypt_pipeline, encrypt_pipeline, trace_block, DecryptOptions, EncryptOptions, KeyBundle,
    SignalingConfig,
};
use crate::convcrypt::{cascade_encrypt, presets, Bits};
use crate::fixtures::*;
use crate::rns::{ModuliSet, ResidueVector};
use crate::rsa::RsaKeyPair;
use crate::subband::{ring, LiftingKernel};
use crate::viterbi::{build_trellis, decode_block, edge_metrics, CascadeDecoder, DecodeOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<String, String>) -> GoldenCheck {
    match result {
        Ok(detail) => GoldenCheck {
            name,
            passed: true,
            detail,
        },
        Err(detail) => GoldenCheck {
            name,
            passed: false,
            detail,
        },
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn big(v: &[u64]) -> Vec<BigUint> {
    v.iter().map(|&x| BigUint::from(x)).collect()
}

fn bits(s: &str) -> Bits {
    s.parse().expect("static bit string")
}

/// Bundle for the sixteen-value simulation array: its values need an RSA
/// modulus above 276509, and `541 · 547 = 295927` also stays below the
/// moduli range `111 · 115 · 119 = 1518915`.
pub fn simulation_bundle() -> KeyBundle {
    KeyBundle::new(
        RsaKeyPair::from_u64(541, 547, 17).expect("static key"),
        ModuliSet::new(&SIMULATION_MODULI).expect("static moduli"),
        LiftingKernel::new(WORKED_KERNEL).expect("static kernel"),
        presets::identity(8),
        SignalingConfig::default(),
    )
    .expect("static bundle")
}

pub fn pipeline_golden() -> GoldenCheck {
    check(
        "pipeline worked example",
        (|| {
            let kb = KeyBundle::worked(presets::demo8());
            let plain = big(&WORKED_PLAINTEXT);
            let (trace, _, _) = trace_block(&kb, &plain).map_err(|e| e.to_string())?;
            expect(
                "rsa layer",
                trace.rsa_layer.clone(),
                big(&WORKED_CIPHERTEXT),
            )?;
            for (frame, want) in trace.frames.iter().zip(WORKED_LEVEL1_DETAILS) {
                let want: Vec<u64> = want.iter().map(|&v| ring(v, frame.modulus)).collect();
                expect(
                    &format!("level-1 details mod {}", frame.modulus),
                    frame.levels[0].clone(),
                    want,
                )?;
            }
            let fs = encrypt_pipeline(&kb, &plain, EncryptOptions::default())
                .map_err(|e| e.to_string())?;
            let out =
                decrypt_pipeline(&kb, &fs, DecryptOptions::default()).map_err(|e| e.to_string())?;
            expect("decrypted plaintext", out.values, plain)?;
            Ok("rsa layer, level-1 details and roundtrip match".into())
        })(),
    )
}

pub fn crt_golden() -> GoldenCheck {
    check(
        "crt spot check",
        (|| {
            let set = ModuliSet::new(&WORKED_MODULI).map_err(|e| e.to_string())?;
            expect("M", set.range().clone(), BigUint::from(1_317_919u64))?;
            expect(
                "cofactors",
                set.cofactors().to_vec(),
                big(&[12317, 12091, 11663]),
            )?;
            expect("inverses", set.inverses().to_vec(), vec![9, 68, 33])?;
            let x = set
                .from_residues(&ResidueVector::new(vec![44, 42, 38]))
                .map_err(|e| e.to_string())?;
            expect("reconstruction", x, BigUint::from(151u32))?;
            Ok("(44,42,38) -> 151".into())
        })(),
    )
}

pub fn code_golden() -> GoldenCheck {
    check(
        "trellis worked example",
        (|| {
            let key = presets::fig4x23();
            let cw = cascade_encrypt(&key, &bits(CODE_MESSAGE)).map_err(|e| e.to_string())?;
            expect("codeword", cw.clone(), bits(CODE_CODEWORD))?;
            let dec = CascadeDecoder::new(&key).map_err(|e| e.to_string())?;
            let got = dec
                .decode(&bits(CODE_RECEIVED))
                .map_err(|e| e.to_string())?;
            expect("decoded received word", got.input, bits(CODE_MESSAGE))?;
            for i in 0..cw.len() {
                let mut rx = cw.clone();
                rx.flip(i);
                let d = dec.decode(&rx).map_err(|e| e.to_string())?;
                expect(&format!("flip {i}"), d.input, bits(CODE_MESSAGE))?;
            }
            Ok(format!("encode, decode and all {} single flips", cw.len()))
        })(),
    )
}

pub fn metric_golden() -> GoldenCheck {
    check(
        "trellis metric trace",
        (|| {
            let tr = build_trellis(&presets::code_stage2()).map_err(|e| e.to_string())?;
            let rx = bits(CODE_RECEIVED);
            let first = rx.slice(0, 4).to_symbols(4).map_err(|e| e.to_string())?[0];
            expect(
                "first-step metrics",
                edge_metrics(&tr, 0, first),
                vec![3, 1, 3, 1],
            )?;
            let d = decode_block(&tr, &rx, DecodeOptions::OPEN).map_err(|e| e.to_string())?;
            expect("stage-2 inputs", d.input_bits(2), bits(CODE_PBOX_OUTPUT))?;
            Ok("metrics {3,1,3,1}, inputs 00 11 11 10".into())
        })(),
    )
}

pub fn simulation_golden() -> GoldenCheck {
    check(
        "simulation array",
        (|| {
            let set = ModuliSet::new(&SIMULATION_MODULI).map_err(|e| e.to_string())?;
            for &v in &SIMULATION_ARRAY {
                let x = BigUint::from(v);
                let r = set.to_residues(&x).map_err(|e| e.to_string())?;
                expect(
                    "crt roundtrip",
                    set.from_residues(&r).map_err(|e| e.to_string())?,
                    x,
                )?;
            }
            let kb = simulation_bundle();
            let plain = big(&SIMULATION_ARRAY);
            let opts = EncryptOptions { block_len: 16 };
            let fs = encrypt_pipeline(&kb, &plain, opts).map_err(|e| e.to_string())?;
            let out =
                decrypt_pipeline(&kb, &fs, DecryptOptions::default()).map_err(|e| e.to_string())?;
            expect("pipeline roundtrip", out.values, plain)?;
            Ok("16 values through residues and the identity pipeline".into())
        })(),
    )
}

/// All golden checks in a fixed order.
pub fn golden_checks() -> Vec<GoldenCheck> {
    vec![
        pipeline_golden(),
        crt_golden(),
        code_golden(),
        metric_golden(),
        simulation_golden(),
    ]
}
