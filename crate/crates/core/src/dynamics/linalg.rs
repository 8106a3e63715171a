//! Small dense LU factorization with partial pivoting and a 1-norm
//! reciprocal-condition estimate (Hager/Higham), on stack arrays.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
    norm1: f64,
}

impl<const N: usize> Lu<N> {
    /// Factors `a`; an exactly zero pivot is reported as ill-conditioned.
    pub fn factor(a: &[[f64; N]; N]) -> Result<Self> {
        let norm1 = norm1(a);
        let mut lu = *a;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        for k in 0..N {
            let mut piv = k;
            let mut best = lu[k][k].abs();
            for (i, row) in lu.iter().enumerate().skip(k + 1) {
                if row[k].abs() > best {
                    best = row[k].abs();
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::IllConditioned { rcond: 0.0 });
            }
            if piv != k {
                lu.swap(k, piv);
                perm.swap(k, piv);
            }
            let inv = 1.0 / lu[k][k];
            let pivot_row = lu[k];
            for row in lu.iter_mut().skip(k + 1) {
                let factor = row[k] * inv;
                if factor != 0.0 {
                    row[k] = factor;
                    for j in k + 1..N {
                        row[j] -= factor * pivot_row[j];
                    }
                } else {
                    row[k] = 0.0;
                }
            }
        }
        Ok(Lu { lu, perm, norm1 })
    }

    pub fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut y: [f64; N] = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..N).rev() {
            let mut s = y[i];
            for j in i + 1..N {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s / self.lu[i][i];
        }
        y
    }

    /// Solves `A^T z = b`.
    pub fn solve_transpose(&self, b: &[f64; N]) -> [f64; N] {
        let mut w = *b;
        // U^T w = b
        for i in 0..N {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j][i] * w[j];
            }
            w[i] = s / self.lu[i][i];
        }
        // L^T v = w
        for i in (0..N).rev() {
            let mut s = w[i];
            for j in i + 1..N {
                s -= self.lu[j][i] * w[j];
            }
            w[i] = s;
        }
        let mut z = [0.0; N];
        for i in 0..N {
            z[self.perm[i]] = w[i];
        }
        z
    }

    /// Estimate of `1 / (||A||_1 ||A^-1||_1)`.
    pub fn rcond(&self) -> f64 {
        let inv_norm = self.inverse_norm1_estimate();
        if inv_norm == 0.0 || self.norm1 == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm1 * inv_norm)
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let mut x = [1.0 / N as f64; N];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = [0.0; N];
            x[j] = 1.0;
        }
        // Higham's alternating-sign test vector guards against the classic
        // underestimation cases.
        let alt: [f64; N] = std::array::from_fn(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / (N as f64 - 1.0).max(1.0))
        });
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * N as f64);
        estimate.max(alt_est)
    }
}

pub fn norm1<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N)
        .map(|j| a.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn mat_vec<const N: usize>(a: &[[f64; N]; N], x: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i].iter().zip(x).map(|(m, v)| m * v).sum())
}
