//! Small dense-band linear algebra used by the Euler-Lagrange Newton solver.
//!
//! LAPACK-style band storage with `kl` extra rows for pivot fill-in: entry
//! `(i, j)` lives at `data[j * ld + (i - j + kl + ku)]` for
//! `j - ku - kl <= i <= j + kl`.

use crate::{Error, Result};

pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    /// Zero matrix with `kl` sub- and `ku` superdiagonals. The upper band is
    /// widened by `kl` to accommodate fill-in during pivoted elimination.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, ld, data: vec![0.0; ld * n] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i, "({i},{j}) outside band");
        j * self.ld + (i + self.kl + self.ku - j)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// Replace `A` by `D A D` with `D = diag(d)`, touching only the stored
    /// band.
    pub fn scale_symmetric(&mut self, d: &[f64]) {
        debug_assert_eq!(d.len(), self.n);
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku + self.kl);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                let k = self.idx(i, j);
                self.data[k] *= d[i] * d[j];
            }
        }
    }

    /// LU factorization with partial pivoting; the band is overwritten with
    /// the factors.
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let mut pivots = vec![0usize; n];

        for k in 0..n {
            let imax = (k + kl).min(n - 1);
            // pivot search in column k
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=imax {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::NonFinite(format!("singular band matrix at column {k}")));
            }
            pivots[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            // scale the multiplier column (contiguous within column k)
            let piv = self.data[self.idx(k, k)];
            let col_k = self.idx(k, k);
            let rows = imax - k;
            for off in 1..=rows {
                self.data[col_k + off] /= piv;
            }
            // rank-1 band update, column by column; entries of a column are
            // contiguous, so the inner loop is a straight axpy
            for j in k + 1..=jmax {
                let akj = self.data[self.idx(k, j)];
                if akj == 0.0 {
                    continue;
                }
                let col_j = self.idx(k, j);
                let (lo, hi) = self.data.split_at_mut(col_j + 1);
                let mults = &lo[col_k + 1..col_k + 1 + rows];
                let target = &mut hi[..rows];
                for (t, m) in target.iter_mut().zip(mults) {
                    *t -= m * akj;
                }
            }
        }
        Ok(BandedLu { mat: self, pivots })
    }

    /// One-shot factor-and-solve convenience.
    pub fn solve(self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::Dimension(format!(
                "rhs length {} does not match matrix size {}",
                rhs.len(),
                self.n
            )));
        }
        let lu = self.factor()?;
        let mut x = rhs.to_vec();
        lu.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Factored band matrix, reusable across right-hand sides.
pub struct BandedLu {
    mat: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.mat.n;
        debug_assert_eq!(x.len(), n);
        let kl = self.mat.kl;
        let ku = self.mat.ku;
        // forward substitution with the stored multipliers and row swaps
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let imax = (k + kl).min(n - 1);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=imax {
                    x[i] -= self.mat.data[self.mat.idx(i, k)] * xk;
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let jmax = (k + ku + kl).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=jmax {
                acc -= self.mat.data[self.mat.idx(k, j)] * x[j];
            }
            x[k] = acc / self.mat.data[self.mat.idx(k, k)];
        }
    }
}
