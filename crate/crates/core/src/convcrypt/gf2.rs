use std::fmt;

use rand::Rng;

use super::bits::{format_field, parse_field};
use super::CryptError;

/// A binary `rows × cols` matrix acting on row vectors: `y = u · G`.
///
/// Row `i` holds the contribution of input bit `rows-1-i` (row 0 is the input
/// MSB); each row is stored as a `cols`-bit mask whose MSB is column 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= 32 && cols <= 32,
            "GF(2) matrices are limited to 32x32"
        );
        Self {
            rows,
            cols,
            data: vec![0; rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.data[i] = 1 << (size - 1 - i);
        }
        m
    }

    /// Builds a matrix from binary row strings such as `"11000000"`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, CryptError> {
        if rows.is_empty() {
            return Err(CryptError::KeyValidation("matrix has no rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len());
        let mut cols = None;
        for r in rows {
            let (v, w) = parse_field(r.as_ref().trim())?;
            if *cols.get_or_insert(w) != w {
                return Err(CryptError::KeyValidation(
                    "matrix rows differ in width".into(),
                ));
            }
            data.push(v);
        }
        if rows.len() > 32 {
            return Err(CryptError::KeyValidation(
                "matrix has more than 32 rows".into(),
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols: cols.unwrap_or(0),
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        let mask = mask(cols);
        for r in &mut m.data {
            *r = rng.random::<u32>() & mask;
        }
        m
    }

    pub fn random_invertible<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        loop {
            let m = Self::random(size, size, rng);
            if m.rank() == size {
                return m;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        (self.data[row] >> (self.cols - 1 - col)) & 1 == 1
    }

    pub fn row_strings(&self) -> Vec<String> {
        self.data
            .iter()
            .map(|&r| format_field(r, self.cols))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&r| r == 0)
    }

    /// `u · G` for a `rows`-bit input `u`.
    pub fn apply(&self, u: u32) -> u32 {
        let mut acc = 0;
        for (i, &row) in self.data.iter().enumerate() {
            if (u >> (self.rows - 1 - i)) & 1 == 1 {
                acc ^= row;
            }
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.data[j] |= 1 << (self.rows - 1 - i);
                }
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for bit in (0..self.cols).rev() {
            let Some(p) = (rank..rows.len()).find(|&i| (rows[i] >> bit) & 1 == 1) else {
                continue;
            };
            rows.swap(rank, p);
            for i in 0..rows.len() {
                if i != rank && (rows[i] >> bit) & 1 == 1 {
                    rows[i] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse of a square matrix, if it has full rank.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let bit = n - 1 - col;
            let p = (col..n).find(|&i| (a[i] >> bit) & 1 == 1)?;
            a.swap(col, p);
            inv.swap(col, p);
            for i in 0..n {
                if i != col && (a[i] >> bit) & 1 == 1 {
                    a[i] ^= a[col];
                    inv[i] ^= inv[col];
                }
            }
        }
        Some(Self {
            rows: n,
            cols: n,
            data: inv,
        })
    }
}

pub(crate) fn mask(width: usize) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.row_strings()).finish()
    }
}
