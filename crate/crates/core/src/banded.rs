//! Banded LU factorisation with partial pivoting.
//!
//! Storage is row-major: row `i` holds columns `i − kl ..= i + ku + kl`,
//! the extra `kl` superdiagonals receiving the fill produced by row swaps.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` at `(i, j)`; the entry must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    /// `y = A x` for the unfactored matrix.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorises in place. A pivot below `1e-300` in magnitude, or one that
    /// is tiny relative to the largest entry, is reported as singular.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.offset(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.offset(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300) || best < scale * 1e-15 {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = self.offset(k, j);
                    let b = self.offset(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.offset(k, k)];
            let row_k_start = self.offset(k, k);
            let len = last_col - k;
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let pivot_row = &head[row_k_start + 1..row_k_start + 1 + len];
            for i in k + 1..=last_row {
                // row i, column k sits at offset (k + kl − i) within the row
                let base = (i - k - 1) * w;
                let col_k = base + (k + kl - i);
                let l = tail[col_k] / pivot;
                tail[col_k] = l;
                if l != 0.0 {
                    let row = &mut tail[col_k + 1..col_k + 1 + len];
                    for (a, b) in row.iter_mut().zip(pivot_row) {
                        *a -= l * b;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    x[i] -= m.data[m.offset(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + m.ku + m.kl).min(n - 1) {
                s -= m.data[m.offset(k, j)] * x[j];
            }
            x[k] = s / m.data[m.offset(k, k)];
        }
        x
    }
}
