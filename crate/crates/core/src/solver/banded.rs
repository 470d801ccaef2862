//! Symmetric positive definite band matrices with an in-place Cholesky
//! factorization.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Lower band of a symmetric `n x n` matrix, `kd` sub-diagonals, stored
/// column by column: entry `(i, j)` with `0 <= i - j <= kd` lives at
/// `j * (kd + 1) + (i - j)`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, kd: usize) -> Self {
        Self { n, kd, data: vec![0.0; n * (kd + 1)] }
    }

    pub(crate) fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.kd, "entry outside the band");
        j * (self.kd + 1) + (i - j)
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.kd {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.data[i * (self.kd + 1)]
    }

    pub(crate) fn add_diag(&mut self, i: usize, v: f64) {
        self.data[i * (self.kd + 1)] += v;
    }

    /// Replaces row and column `i` by the unit vector.
    pub(crate) fn pin(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kd);
        let hi = (i + self.kd).min(self.n - 1);
        for j in lo..=hi {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        self.data[i * (self.kd + 1)] = 1.0;
    }

    /// Overwrites `self` with its Cholesky factor `L`. Returns `false` when a
    /// pivot is not positive.
    pub(crate) fn factor(&mut self) -> bool {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        for j in 0..n {
            let k0 = j.saturating_sub(kd);
            let mut s = self.data[j * w];
            for k in k0..j {
                let l = self.data[k * w + (j - k)];
                s -= l * l;
            }
            if !(s > 0.0) || !s.is_finite() {
                return false;
            }
            let d = s.sqrt();
            self.data[j * w] = d;
            for i in j + 1..=(j + kd).min(n - 1) {
                let mut s = self.data[j * w + (i - j)];
                for k in i.saturating_sub(kd)..j {
                    s -= self.data[k * w + (i - k)] * self.data[k * w + (j - k)];
                }
                self.data[j * w + (i - j)] = s / d;
            }
        }
        true
    }

    /// Solves `L L^T x = b` in place with a factor from [`Self::factor`].
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        for j in 0..n {
            b[j] /= self.data[j * w];
            let bj = b[j];
            for i in j + 1..=(j + kd).min(n - 1) {
                b[i] -= self.data[j * w + (i - j)] * bj;
            }
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            for i in j + 1..=(j + kd).min(n - 1) {
                s -= self.data[j * w + (i - j)] * b[i];
            }
            b[j] = s / self.data[j * w];
        }
    }
}
