//! Banded matrices with LU factorization and partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: column-major with `kl`
//! extra rows reserved for fill-in produced by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, ld, data: vec![0.0; ld * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ld
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Factorizes in place; fails on an exactly zero pivot.
    pub fn factorize(mut self) -> Result<BandLu> {
        let (n, kl, ku, ld) = (self.n, self.kl, self.ku, self.ld);
        let kv = kl + ku;
        let a = &mut self.data;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ld + kv;
            let mut jp = 0;
            let mut best = a[col].abs();
            for i in 1..=km {
                let v = a[col + i].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve { row: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let r0 = kv + j - c + c * ld;
                    let r1 = kv + j + jp - c + c * ld;
                    a.swap(r0, r1);
                }
            }
            let piv = a[col];
            for i in 1..=km {
                a[col + i] /= piv;
            }
            // columns right of j start at (j + 1) ld, past the multipliers
            let (head, tail) = a.split_at_mut((j + 1) * ld);
            let mult = &head[col + 1..=col + km];
            for c in j + 1..=ju {
                let base = kv + j - c + c * ld - (j + 1) * ld;
                let ujc = tail[base];
                if ujc != 0.0 {
                    for (t, &l) in tail[base + 1..=base + km].iter_mut().zip(mult) {
                        *t -= l * ujc;
                    }
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let BandMatrix { n, kl, ku, ld, data: a } = &self.m;
        let (n, kl, ku, ld) = (*n, *kl, *ku, *ld);
        let kv = kl + ku;
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.ipiv[j]);
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for i in 1..=km {
                    x[j + i] -= a[j * ld + kv + i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= a[j * ld + kv];
            let xj = x[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                x[i] -= a[kv + i - j + j * ld] * xj;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn solves_random_banded_systems_against_dense_lu() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (12, 2, 3), (40, 5, 5), (30, 1, 7)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // weak diagonal forces pivoting
                    let v = rng.random_range(-1.0..1.0) * if i == j { 0.01 } else { 1.0 };
                    band.add(i, j, v);
                    dense[(i, j)] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = band.matvec(&b);
            let dy = &dense * DVector::from_column_slice(&b);
            assert!(y.iter().zip(dy.iter()).all(|(p, q)| (p - q).abs() < 1e-13));
            let x = band.factorize().unwrap().solve(&b);
            let xd = dense.lu().solve(&DVector::from_column_slice(&b)).unwrap();
            for (p, q) in x.iter().zip(xd.iter()) {
                assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn zero_column_is_reported() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(2, 2, 1.0);
        assert!(matches!(m.factorize(), Err(Error::LinearSolve { row: 1 })));
    }
}
