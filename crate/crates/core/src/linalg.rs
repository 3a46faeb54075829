//! Symmetric banded matrices with an in-place Cholesky factorisation.
//!
//! The transcription Hessian is banded once variables are ordered stage by
//! stage, so factorisation cost is `O(n·bw²)`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

/// Lower band of a symmetric `n × n` matrix with half-bandwidth `bw`.
///
/// Row `i` stores columns `i − bw ..= i` contiguously; entries left of column
/// zero are padding and stay zero.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    /// Replaces row and column `i` by the unit vector (diagonal set to `diag`).
    pub fn pin(&mut self, i: usize, diag: f64) {
        let lo = i.saturating_sub(self.bw);
        for j in lo..i {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        let hi = (i + self.bw).min(self.n - 1);
        for r in (i + 1)..=hi {
            let k = self.idx(r, i);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = diag;
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
    }

    /// Overwrites `self` with its Cholesky factor `L` (`A = L Lᵀ`).
    pub fn factor(&mut self) -> Result<(), NotPositiveDefinite> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                // columns shared by rows i and j
                let k0 = lo.max(j.saturating_sub(self.bw));
                let len = j - k0;
                let ri = i * w + self.bw - (i - k0);
                let rj = j * w + self.bw - (j - k0);
                let mut s = self.data[i * w + self.bw - (i - j)];
                for t in 0..len {
                    s -= self.data[ri + t] * self.data[rj + t];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(NotPositiveDefinite { pivot: i });
                    }
                    self.data[i * w + self.bw] = s.sqrt();
                } else {
                    let d = self.data[j * w + self.bw];
                    self.data[i * w + self.bw - (i - j)] = s / d;
                }
            }
        }
        Ok(())
    }

    /// Solves `L Lᵀ x = b` in place after [`factor`](Self::factor).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for j in lo..i {
                s -= self.data[i * w + self.bw - (i - j)] * b[j];
            }
            b[i] = s / self.data[i * w + self.bw];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let hi = (i + self.bw).min(self.n - 1);
            for r in (i + 1)..=hi {
                s -= self.data[r * w + self.bw - (r - i)] * b[r];
            }
            b[i] = s / self.data[i * w + self.bw];
        }
    }
}
