//! Attack-cost and link-performance calculators.
//!
//! Attack step counts can exceed the `f64` range for realistic parameters,
//! so they are carried as base-10 logarithms.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("code profile has no path counts")]
    EmptyProfile,
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

/// Fixed-point scale for the extended-precision square roots.
const FRAC_BITS: u64 = 192;

/// Fermat factoring steps `(p+q)/2 − √(pq)`.
pub fn fermat_steps(p: &BigUint, q: &BigUint) -> f64 {
    // (p+q)/2 and √(pq) scaled by 2^FRAC_BITS; AM ≥ GM keeps this non-negative
    let am = (p + q) << (FRAC_BITS - 1);
    let gm = ((p * q) << (2 * FRAC_BITS)).sqrt();
    fixed_to_f64(&(am - gm), FRAC_BITS)
}

/// The same quantity in the form `(√q − √p)² / 2`.
pub fn fermat_steps_sqrt_form(p: &BigUint, q: &BigUint) -> f64 {
    let sp = (p << (2 * FRAC_BITS)).sqrt();
    let sq = (q << (2 * FRAC_BITS)).sqrt();
    let d = if sq > sp { sq - sp } else { sp - sq };
    fixed_to_f64(&((&d * &d) >> 1u32), 2 * FRAC_BITS)
}

fn fixed_to_f64(v: &BigUint, frac_bits: u64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    // keep the top 64 bits so the conversion never overflows
    let shift = v.bits().saturating_sub(64);
    let top = (v >> shift).to_f64().expect("fits");
    top * 2f64.powi(shift as i32 - frac_bits as i32)
}

/// A non-negative count stored as `log10`; zero is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StepCount {
    pub log10: f64,
}

impl StepCount {
    pub fn from_value(v: f64) -> Self {
        Self { log10: v.log10() }
    }

    /// The count as `f64`; `inf` when out of range.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10)
    }

    pub fn times(self, other: StepCount) -> StepCount {
        StepCount {
            log10: self.log10 + other.log10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    /// Plaintext–ciphertext block count.
    pub p_blocks: u64,
    /// Transducer state count.
    pub q_states: u64,
    /// Bits per symbol.
    pub k: u32,
    /// Cascade stages.
    pub stages: u32,
}

impl AttackParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.p_blocks <= self.k as u64 + 1 {
            return Err(AnalysisError::Param(format!(
                "p = {} must exceed k + 1 = {}",
                self.p_blocks,
                self.k + 1
            )));
        }
        if self.q_states == 0 || self.stages == 0 || self.k == 0 {
            return Err(AnalysisError::Param("q, k and N must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pairs needed to break an `N`-stage cascade:
/// `[p · (q·2^k)/(p−k−1) · (q·2^k)/p · k!/p · 1/p · (k/2)² · 2²]^N`.
pub fn cascade_attack_steps(ap: &AttackParams) -> Result<StepCount, AnalysisError> {
    ap.validate()?;
    let (p, q, k) = (ap.p_blocks as f64, ap.q_states as f64, ap.k);
    let log_q2k = q.log10() + k as f64 * 2f64.log10();
    // k! is exact in f64 below 16; past that sum logarithms instead
    let log_fact = if k < 16 {
        ((1..=k as u64).product::<u64>() as f64).log10()
    } else {
        (1..=k).map(|i| (i as f64).log10()).sum()
    };
    let log_inner = log_q2k - (p - k as f64 - 1.0).log10() + log_q2k - p.log10() + log_fact
        - p.log10()
        - p.log10()
        + 2.0 * (k as f64 / 2.0).log10()
        + 2.0 * 2f64.log10();
    Ok(StepCount {
        log10: ap.stages as f64 * (p.log10() + log_inner),
    })
}

/// Steps to break the whole scheme: Fermat steps on the RSA modulus times
/// the cascade attack.
pub fn combined_attack_steps(
    rsa_p: &BigUint,
    rsa_q: &BigUint,
    ap: &AttackParams,
) -> Result<StepCount, AnalysisError> {
    Ok(StepCount::from_value(fermat_steps(rsa_p, rsa_q)).times(cascade_attack_steps(ap)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThroughputMode {
    /// `R(1 − pe)^N`
    Exact,
    /// `R(1 − N·pe)`, clamped at zero
    Approx,
}

pub fn throughput(
    rate: f64,
    pe: f64,
    block_bits: u32,
    mode: ThroughputMode,
) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&pe) || block_bits == 0 || rate.is_nan() || rate <= 0.0 {
        return Err(AnalysisError::Param(format!(
            "need R > 0, 0 <= pe <= 1, N >= 1 (got R={rate}, pe={pe}, N={block_bits})"
        )));
    }
    Ok(match mode {
        ThroughputMode::Exact => rate * (1.0 - pe).powi(block_bits as i32),
        ThroughputMode::Approx => (rate * (1.0 - block_bits as f64 * pe)).max(0.0),
    })
}

/// Distance spectrum of a convolutional code for the union bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeProfile {
    pub name: String,
    /// Bits per symbol.
    pub k: u32,
    /// Free distance.
    pub l: u32,
    /// `(d, a_d)` pairs sorted by `d`.
    pub spectrum: Vec<(u32, f64)>,
}

impl CodeProfile {
    pub fn new(
        name: impl Into<String>,
        k: u32,
        spectrum: &[(u32, f64)],
    ) -> Result<Self, AnalysisError> {
        let mut spectrum = spectrum.to_vec();
        spectrum.sort_by_key(|&(d, _)| d);
        let l = spectrum.first().ok_or(AnalysisError::EmptyProfile)?.0;
        if k == 0 || l == 0 {
            return Err(AnalysisError::Param(
                "k and the free distance must be positive".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            k,
            l,
            spectrum,
        })
    }

    /// The (2,2,2) code with `T(D) = D³ + 2D⁴`.
    pub fn k2() -> Self {
        Self::new("k2", 2, &crate::fixtures::PROFILE_222).expect("static profile")
    }

    /// The (4,4,2) code.
    pub fn k4() -> Self {
        Self::new("k4", 4, &crate::fixtures::PROFILE_442).expect("static profile")
    }

    /// Looks up a built-in profile by its `n,k,L` triple.
    pub fn by_code(code: &str) -> Result<Self, AnalysisError> {
        match code.replace(' ', "").as_str() {
            "2,2,2" => Ok(Self::k2()),
            "4,4,2" => Ok(Self::k4()),
            other => Err(AnalysisError::Param(format!(
                "unknown code {other:?}; known: 2,2,2 and 4,4,2"
            ))),
        }
    }
}

/// Exponent applied to the per-path bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExponentMode {
    /// Free distance `L` for every term.
    #[default]
    L,
    /// The path distance `d` of each term.
    D,
}

/// Union bound on the bit error probability of coded orthogonal signaling:
/// `2^(k−1)/(2^k−1) · Σ a_d · [4(1 + (k/L)γ) / (2 + (k/L)γ)²]^E`.
pub fn pb_bound(
    profile: &CodeProfile,
    gamma_b: f64,
    mode: ExponentMode,
) -> Result<f64, AnalysisError> {
    if gamma_b.is_nan() || gamma_b <= 0.0 {
        return Err(AnalysisError::Param(format!(
            "SNR per bit must be positive, got {gamma_b}"
        )));
    }
    if profile.spectrum.is_empty() {
        return Err(AnalysisError::EmptyProfile);
    }
    let k = profile.k as f64;
    let x = k / profile.l as f64 * gamma_b;
    let bracket = 4.0 * (1.0 + x) / ((2.0 + x) * (2.0 + x));
    let pre = 2f64.powf(k - 1.0) / (2f64.powf(k) - 1.0);
    let sum: f64 = profile
        .spectrum
        .iter()
        .map(|&(d, a)| {
            let e = match mode {
                ExponentMode::L => profile.l,
                ExponentMode::D => d,
            };
            a * bracket.powi(e as i32)
        })
        .sum();
    Ok(pre * sum)
}

/// Evenly spaced grid `start:stop:step`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnalysisError::Sweep(format!("bad number {t:?} in {s:?}")))
        };
        let grid = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Grid {
                    start: v,
                    stop: v,
                    step: 1.0,
                }
            }
            [a, b] => Grid {
                start: num(a)?,
                stop: num(b)?,
                step: 1.0,
            },
            [a, b, c] => Grid {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => {
                return Err(AnalysisError::Sweep(format!(
                    "expected start:stop:step, got {s:?}"
                )))
            }
        };
        if grid.step <= 0.0 || grid.stop < grid.start {
            return Err(AnalysisError::Sweep(format!("empty grid {s:?}")));
        }
        Ok(grid)
    }
}

/// Shortest decimal rendering that round-trips to 9 significant places.
pub fn format_decimal(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Scientific notation with six fractional digits.
pub fn format_sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// Bit error bound curves over an SNR grid in dB, one column per profile.
pub fn emit_curves(
    profiles: &[CodeProfile],
    snr_db: &Grid,
    mode: ExponentMode,
) -> Result<String, AnalysisError> {
    if profiles.is_empty() {
        return Err(AnalysisError::Sweep("no code profiles".into()));
    }
    let mut out = String::from("snr_db");
    for p in profiles {
        let _ = write!(out, ",pb_{}", p.name);
    }
    out.push('\n');
    for db in snr_db.points() {
        out.push_str(&format_decimal(db));
        for p in profiles {
            let pb = pb_bound(p, 10f64.powf(db / 10.0), mode)?;
            let _ = write!(out, ",{}", format_sci(pb));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Attack cost per stage count.
pub fn emit_attack_table(
    rsa_p: &BigUint,
    rsa_q: &BigUint,
    base: &AttackParams,
    stages: &[u32],
) -> Result<String, AnalysisError> {
    if stages.is_empty() {
        return Err(AnalysisError::Sweep("no stage counts".into()));
    }
    let s1 = fermat_steps(rsa_p, rsa_q);
    let mut out = String::from("stages,s1,log10_s2,log10_s\n");
    for &n in stages {
        let ap = AttackParams { stages: n, ..*base };
        let s2 = cascade_attack_steps(&ap)?;
        let s = StepCount::from_value(s1).times(s2);
        let _ = writeln!(
            out,
            "{n},{},{},{}",
            format_sci(s1),
            format_decimal(s2.log10),
            format_decimal(s.log10)
        );
    }
    Ok(out)
}

/// Exact and approximate throughput over a grid of bit error rates.
pub fn emit_throughput_table(
    rate: f64,
    block_bits: u32,
    pe: &Grid,
) -> Result<String, AnalysisError> {
    let mut out = String::from("pe,exact,approx,rel_diff\n");
    for p in pe.points() {
        let p = p.clamp(0.0, 1.0);
        let exact = throughput(rate, p, block_bits, ThroughputMode::Exact)?;
        let approx = throughput(rate, p, block_bits, ThroughputMode::Approx)?;
        let rel = if exact > 0.0 {
            (exact - approx).abs() / exact
        } else {
            f64::INFINITY
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_sci(p),
            format_sci(exact),
            format_sci(approx),
            format_sci(rel)
        );
    }
    Ok(out)
}
