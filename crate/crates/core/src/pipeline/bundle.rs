//! Key bundle: every secret shared by the two ends of a link, stored as TOML.
//!
//! Numbers that may exceed 64 bits are decimal strings. Matrices are lists
//! of binary row strings; transition tables are lists of
//! `input in_state output out_state` rows.

use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convcrypt::{
    compile_linear_transducer, load_transducer_table, presets, CascadeKey, Gf2Matrix, Interstage,
    PBoxLayer, SBoxLayer, Transducer, TransitionRule,
};
use crate::rns::ModuliSet;
use crate::rsa::RsaKeyPair;
use crate::subband::LiftingKernel;
use crate::viterbi::CascadeDecoder;

pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: [&str; 5] = ["rsa", "rns", "lifting", "cascade", "signaling"];

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle parse error: {0}")]
    Parse(String),
    #[error("bundle is missing section [{0}]")]
    MissingSection(&'static str),
    #[error("bundle format version {found} is not supported (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("unsupported bundle content, written by a newer format? {0}")]
    Unknown(String),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error("bundle i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Channel defaults carried with the keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalingConfig {
    /// Spread every 8 symbol bits over a row of `H_256` before the channel.
    pub walsh: bool,
    pub hadamard_log2: u32,
    pub pe: f64,
    pub seed: u64,
}

impl Default for SignalingConfig {
    fn default() -> Self {
        Self {
            walsh: false,
            hadamard_log2: 8,
            pe: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyBundle {
    pub rsa: RsaKeyPair,
    pub moduli: ModuliSet,
    pub kernel: LiftingKernel,
    pub cascade: CascadeKey,
    pub signaling: SignalingConfig,
}

impl KeyBundle {
    pub fn new(
        rsa: RsaKeyPair,
        moduli: ModuliSet,
        kernel: LiftingKernel,
        cascade: CascadeKey,
        signaling: SignalingConfig,
    ) -> Result<Self, BundleError> {
        let kb = Self {
            rsa,
            moduli,
            kernel,
            cascade,
            signaling,
        };
        kb.validate()?;
        Ok(kb)
    }

    fn validate(&self) -> Result<(), BundleError> {
        let bad = |m: String| Err(BundleError::Invalid(m));
        if let Some(m) = self.moduli.moduli().iter().find(|&&m| m >= 256) {
            return bad(format!("modulus {m} does not fit an 8-bit symbol"));
        }
        if &self.rsa.m > self.moduli.range() {
            return bad(format!(
                "RSA modulus {} exceeds the RNS dynamic range {}",
                self.rsa.m,
                self.moduli.range()
            ));
        }
        let k = self.cascade.input_width();
        if 8 % k != 0 {
            return bad(format!(
                "cascade input width {k} does not divide the 8-bit symbol"
            ));
        }
        if !self.cascade.is_invertible() {
            CascadeDecoder::new(&self.cascade)
                .map_err(|e| BundleError::Invalid(format!("cascade: {e}")))?;
        }
        if self.signaling.walsh && self.signaling.hadamard_log2 != 8 {
            return bad("walsh spreading needs hadamard_log2 = 8".into());
        }
        if !(0.0..=1.0).contains(&self.signaling.pe) {
            return bad(format!("signaling pe {} outside [0, 1]", self.signaling.pe));
        }
        Ok(())
    }

    /// The worked-example link: primes (13, 37), e = 5, moduli
    /// {107, 109, 113}, kernel {2, 0, 0} and the given cascade.
    pub fn worked(cascade: CascadeKey) -> Self {
        use crate::fixtures::*;
        Self::new(
            RsaKeyPair::from_u64(WORKED_PRIMES.0, WORKED_PRIMES.1, WORKED_EXPONENT)
                .expect("worked key"),
            ModuliSet::new(&WORKED_MODULI).expect("worked moduli"),
            LiftingKernel::new(WORKED_KERNEL).expect("worked kernel"),
            cascade,
            SignalingConfig::default(),
        )
        .expect("worked bundle")
    }

    pub fn to_toml(&self) -> String {
        let file = BundleFile {
            format_version: FORMAT_VERSION,
            rsa: RsaSection {
                p: self.rsa.p.to_string(),
                q: self.rsa.q.to_string(),
                e: self.rsa.e.to_string(),
                d: self.rsa.d.to_string(),
                m: self.rsa.m.to_string(),
            },
            rns: RnsSection {
                moduli: self.moduli.moduli().to_vec(),
            },
            lifting: LiftingSection {
                kernel: self.kernel.taps.to_vec(),
            },
            cascade: CascadeSection {
                stage: self.cascade.stages().iter().map(stage_section).collect(),
                interstage: self
                    .cascade
                    .interstage()
                    .iter()
                    .map(|l| InterstageSection {
                        sbox_width: l.sbox.box_width(),
                        sboxes: l.sbox.boxes().to_vec(),
                        pbox: l.pbox.permutation().to_vec(),
                    })
                    .collect(),
            },
            signaling: self.signaling,
        };
        let body = toml::to_string_pretty(&file).expect("bundle serializes");
        format!("# crosslayer key bundle\n{body}")
    }

    pub fn from_toml(text: &str) -> Result<Self, BundleError> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| BundleError::Parse(e.to_string()))?;
        match value.get("format_version") {
            Some(toml::Value::Integer(v)) if *v == FORMAT_VERSION as i64 => {}
            Some(v) => {
                return Err(BundleError::Version {
                    found: v.to_string(),
                    expected: FORMAT_VERSION,
                })
            }
            None => return Err(BundleError::Parse("missing format_version".into())),
        }
        for s in SECTIONS {
            if !value.contains_key(s) {
                return Err(BundleError::MissingSection(s));
            }
        }
        let file: BundleFile = toml::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("unknown field") {
                BundleError::Unknown(msg)
            } else {
                BundleError::Parse(msg)
            }
        })?;
        file.into_bundle()
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

pub fn save_bundle(kb: &KeyBundle, path: &Path) -> Result<(), BundleError> {
    kb.save(path)
}

pub fn load_bundle(path: &Path) -> Result<KeyBundle, BundleError> {
    KeyBundle::load(path)
}

/// Cascade presets selectable by name.
pub fn cascade_preset(name: &str, seed: u64) -> Option<CascadeKey> {
    Some(match name {
        "demo8" => presets::demo8(),
        "fig4x23" => presets::fig4x23(),
        "fec" => presets::fec(),
        "random" => presets::random(seed),
        "identity" => presets::identity(8),
        _ => return None,
    })
}

pub const CASCADE_PRESETS: [&str; 5] = ["demo8", "fig4x23", "fec", "random", "identity"];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    format_version: u32,
    rsa: RsaSection,
    rns: RnsSection,
    lifting: LiftingSection,
    cascade: CascadeSection,
    signaling: SignalingConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RsaSection {
    p: String,
    q: String,
    e: String,
    d: String,
    m: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RnsSection {
    moduli: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftingSection {
    kernel: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CascadeSection {
    stage: Vec<StageSection>,
    #[serde(default)]
    interstage: Vec<InterstageSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum StageSection {
    Table {
        rows: Vec<String>,
    },
    Linear {
        /// `generators[set][i]` is `G_i` of that set as binary rows.
        generators: Vec<Vec<Vec<String>>>,
        /// `[from, lo, hi, to]`
        rules: Vec<[u32; 4]>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterstageSection {
    sbox_width: usize,
    sboxes: Vec<Vec<u32>>,
    pbox: Vec<usize>,
}

fn stage_section(t: &Transducer) -> StageSection {
    match t {
        Transducer::Table(tt) => StageSection::Table {
            rows: tt.to_table_text(),
        },
        Transducer::Linear(lt) => StageSection::Linear {
            generators: lt
                .generator_sets()
                .iter()
                .map(|set| set.iter().map(Gf2Matrix::row_strings).collect())
                .collect(),
            rules: lt
                .rules()
                .iter()
                .map(|r| [r.from as u32, r.lo, r.hi, r.to as u32])
                .collect(),
        },
    }
}

fn parse_big(field: &str, v: &str) -> Result<BigUint, BundleError> {
    v.trim()
        .parse()
        .map_err(|_| BundleError::Parse(format!("rsa.{field}: {v:?} is not a decimal integer")))
}

impl BundleFile {
    fn into_bundle(self) -> Result<KeyBundle, BundleError> {
        let invalid = |section: &str, e: &dyn std::fmt::Display| {
            BundleError::Invalid(format!("[{section}] {e}"))
        };
        let rsa = RsaKeyPair::derive(
            parse_big("p", &self.rsa.p)?,
            parse_big("q", &self.rsa.q)?,
            parse_big("e", &self.rsa.e)?,
        )
        .map_err(|e| invalid("rsa", &e))?;
        if rsa.d != parse_big("d", &self.rsa.d)? || rsa.m != parse_big("m", &self.rsa.m)? {
            return Err(invalid("rsa", &"stored d or m does not match p, q, e"));
        }
        let moduli = ModuliSet::new(&self.rns.moduli).map_err(|e| invalid("rns", &e))?;
        let taps: [i64; 3] = self
            .lifting
            .kernel
            .as_slice()
            .try_into()
            .map_err(|_| invalid("lifting", &"kernel needs exactly 3 taps"))?;
        let kernel = LiftingKernel::new(taps).map_err(|e| invalid("lifting", &e))?;
        let mut stages = Vec::new();
        for (i, s) in self.cascade.stage.into_iter().enumerate() {
            let name = format!("cascade.stage {}", i + 1);
            let t = match s {
                StageSection::Table { rows } => load_transducer_table(&rows.join("\n")),
                StageSection::Linear { generators, rules } => generators
                    .iter()
                    .map(|set| set.iter().map(|m| Gf2Matrix::from_rows(m)).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()
                    .and_then(|sets| {
                        let rules = rules
                            .iter()
                            .map(|&[from, lo, hi, to]| TransitionRule {
                                from: from as usize,
                                lo,
                                hi,
                                to: to as usize,
                            })
                            .collect();
                        compile_linear_transducer(sets, rules)
                    }),
            }
            .map_err(|e| invalid(&name, &e))?;
            stages.push(t);
        }
        let mut layers = Vec::new();
        for (i, l) in self.cascade.interstage.into_iter().enumerate() {
            let name = format!("cascade.interstage {}", i + 1);
            let sbox = SBoxLayer::new(l.sbox_width, l.sboxes).map_err(|e| invalid(&name, &e))?;
            let pbox = PBoxLayer::new(l.pbox).map_err(|e| invalid(&name, &e))?;
            layers.push(Interstage { sbox, pbox });
        }
        let cascade = CascadeKey::new(stages, layers).map_err(|e| invalid("cascade", &e))?;
        KeyBundle::new(rsa, moduli, kernel, cascade, self.signaling)
    }
}
