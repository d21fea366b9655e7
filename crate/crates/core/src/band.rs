//! Symmetric positive definite banded matrices with an in-place Cholesky
//! factorization. The grid operators order unknowns lexicographically, so
//! their bandwidth is a small multiple of the grid width and a dense-band
//! factorization is both simple and fast at the resolutions used here.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix; row i stores columns i-bw ..= i.
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Add v at (i, j); only the lower triangle is stored, so callers pass
    /// each symmetric pair once with j <= i.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i || i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// In-place Cholesky; fails on a non-positive pivot.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..self.n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                let kmin = jmin.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + (j + bw - i)];
                if kmin < j {
                    let len = j - kmin;
                    let ri = i * w + (kmin + bw - i);
                    let rj = j * w + (kmin + bw - j);
                    let (a, b) = (&self.data[ri..ri + len], &self.data[rj..rj + len]);
                    let mut acc = 0.0;
                    for k in 0..len {
                        acc += a[k] * b[k];
                    }
                    s -= acc;
                }
                if j < i {
                    self.data[i * w + (j + bw - i)] = s / self.data[j * w + bw];
                } else {
                    if s <= 0.0 {
                        return Err(Error::Solver(format!(
                            "non-positive pivot {s:.3e} at row {i}; matrix is not SPD"
                        )));
                    }
                    self.data[i * w + bw] = s.sqrt();
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bw,
            data: self.data,
        })
    }
}

/// Cholesky factor stored in band form; solves L L^T x = b.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        let mut x = b.to_vec();
        // Forward: L z = b.
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.bw);
            let row = i * w + (jmin + self.bw - i);
            let mut s = x[i];
            for (k, xj) in x[jmin..i].iter().enumerate() {
                s -= self.data[row + k] * xj;
            }
            x[i] = s / self.data[i * w + self.bw];
        }
        // Backward: L^T y = z, reading L[j][i] down the column band.
        for i in (0..self.n).rev() {
            let mut s = x[i];
            let jmax = (i + self.bw).min(self.n - 1);
            for j in (i + 1)..=jmax {
                s -= self.data[j * w + (i + self.bw - j)] * x[j];
            }
            x[i] = s / self.data[i * w + self.bw];
        }
        x
    }
}
