//! Multilevel integer lifting over the residue ring `Z_m`.
//!
//! One level splits `x` into even samples (the approximation) and a
//! predicted residual for the odd samples (the detail):
//!
//! ```text
//! detail[k] = x[2k+1] - h1·x[2k] - h2·x[2k+2] - h3·x[2k+4]   (mod m)
//! approx[k] = x[2k]
//! ```
//!
//! Taps past the end of the even sequence read as zero. The approximation is
//! split again until a single point remains.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubbandError {
    #[error("sequence length {0} is not usable here: {1}")]
    Length(usize, &'static str),
    #[error("approximation has {approx} points but detail has {detail}")]
    Mismatch { approx: usize, detail: usize },
    #[error("modulus {0} is below 2")]
    Modulus(u64),
    #[error("lifting kernel must have a nonzero leading tap")]
    Kernel,
    #[error("malformed frame: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftingKernel {
    pub taps: [i64; 3],
}

impl LiftingKernel {
    pub fn new(taps: [i64; 3]) -> Result<Self, SubbandError> {
        if taps[0] == 0 {
            return Err(SubbandError::Kernel);
        }
        Ok(Self { taps })
    }

    /// Prediction of the odd sample at `k` from the even samples, in `Z_m`.
    fn predict(&self, even: &[u64], k: usize, m: u64) -> u64 {
        let mut acc = 0u128;
        for (j, &h) in self.taps.iter().enumerate() {
            if let Some(&e) = even.get(k + j) {
                acc += ring(h, m) as u128 * e as u128;
            }
        }
        (acc % m as u128) as u64
    }
}

/// Canonical representative of `v` in `[0, m)`.
pub fn ring(v: i64, m: u64) -> u64 {
    v.rem_euclid(m as i64) as u64
}

fn check_modulus(m: u64) -> Result<(), SubbandError> {
    if m < 2 || m > i64::MAX as u64 {
        return Err(SubbandError::Modulus(m));
    }
    Ok(())
}

pub fn split_level(
    x: &[u64],
    kernel: &LiftingKernel,
    m: u64,
) -> Result<(Vec<u64>, Vec<u64>), SubbandError> {
    check_modulus(m)?;
    if x.len() < 2 || !x.len().is_multiple_of(2) {
        return Err(SubbandError::Length(
            x.len(),
            "split needs an even length of at least 2",
        ));
    }
    let even: Vec<u64> = x.iter().step_by(2).map(|v| v % m).collect();
    let detail = x
        .iter()
        .skip(1)
        .step_by(2)
        .enumerate()
        .map(|(k, &odd)| {
            let p = kernel.predict(&even, k, m);
            (odd % m + m - p) % m
        })
        .collect();
    Ok((even, detail))
}

pub fn merge_level(
    approx: &[u64],
    detail: &[u64],
    kernel: &LiftingKernel,
    m: u64,
) -> Result<Vec<u64>, SubbandError> {
    check_modulus(m)?;
    if approx.len() != detail.len() {
        return Err(SubbandError::Mismatch {
            approx: approx.len(),
            detail: detail.len(),
        });
    }
    let even: Vec<u64> = approx.iter().map(|v| v % m).collect();
    let mut out = Vec::with_capacity(2 * even.len());
    for (k, &d) in detail.iter().enumerate() {
        let p = kernel.predict(&even, k, m);
        out.push(even[k]);
        out.push((d % m + p) % m);
    }
    Ok(out)
}

/// Detail sequences from the finest level down, plus the one-point approximation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandFrame {
    pub modulus: u64,
    pub kernel: LiftingKernel,
    /// `levels[0]` is the first split (length n/2), the last has length 1.
    pub levels: Vec<Vec<u64>>,
    pub final_approx: u64,
}

impl SubbandFrame {
    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum::<usize>() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn validate(&self) -> Result<(), SubbandError> {
        check_modulus(self.modulus)?;
        let depth = self.levels.len();
        for (i, level) in self.levels.iter().enumerate() {
            let want = 1usize << (depth - 1 - i);
            if level.len() != want {
                return Err(SubbandError::Structure(format!(
                    "level {} has {} points, expected {want}",
                    i + 1,
                    level.len()
                )));
            }
            if let Some(v) = level.iter().find(|&&v| v >= self.modulus) {
                return Err(SubbandError::Structure(format!(
                    "value {v} at level {} is not below modulus {}",
                    i + 1,
                    self.modulus
                )));
            }
        }
        if self.final_approx >= self.modulus {
            return Err(SubbandError::Structure(format!(
                "approximation {} is not below modulus {}",
                self.final_approx, self.modulus
            )));
        }
        Ok(())
    }
}

pub fn decompose(x: &[u64], kernel: &LiftingKernel, m: u64) -> Result<SubbandFrame, SubbandError> {
    check_modulus(m)?;
    if !x.len().is_power_of_two() {
        return Err(SubbandError::Length(
            x.len(),
            "decomposition needs a power-of-two length",
        ));
    }
    let mut approx: Vec<u64> = x.iter().map(|v| v % m).collect();
    let mut levels = Vec::new();
    while approx.len() > 1 {
        let (a, d) = split_level(&approx, kernel, m)?;
        levels.push(d);
        approx = a;
    }
    Ok(SubbandFrame {
        modulus: m,
        kernel: *kernel,
        levels,
        final_approx: approx[0],
    })
}

pub fn reconstruct(frame: &SubbandFrame) -> Result<Vec<u64>, SubbandError> {
    frame.validate()?;
    let mut approx = vec![frame.final_approx];
    for detail in frame.levels.iter().rev() {
        approx = merge_level(&approx, detail, &frame.kernel, frame.modulus)?;
    }
    Ok(approx)
}
