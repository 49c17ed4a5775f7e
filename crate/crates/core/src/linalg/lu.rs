use rayon::prelude::*;

use super::Matrix;
use crate::error::{HbemError, Result};

const BLOCK: usize = 64;
const COLUMN_TILE: usize = 512;

/// `P A = L U` with partial pivoting; `L` unit lower, both packed in place.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    /// `perm[i]` is the original row that ended up in row `i`.
    perm: Vec<usize>,
}

impl LuFactors {
    /// Blocked right-looking factorization. The trailing update runs over
    /// rows in parallel; every entry sees the same operation order for any
    /// worker count.
    pub fn factor(a: &Matrix) -> Result<Self> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = a.max_abs() * f64::EPSILON * 1e-2;

        let mut kb = 0;
        while kb < n {
            let kend = (kb + BLOCK).min(n);

            // panel: columns kb..kend over rows kb..n
            for k in kb..kend {
                let mut p = k;
                let mut best = lu[k * n + k].abs();
                for i in k + 1..n {
                    let v = lu[i * n + k].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if !(best > tiny) {
                    return Err(HbemError::SingularMatrix { column: k });
                }
                if p != k {
                    let (top, bottom) = lu.split_at_mut(p * n);
                    top[k * n..(k + 1) * n].swap_with_slice(&mut bottom[..n]);
                    perm.swap(k, p);
                }
                let pivot = lu[k * n + k];
                let (top, bottom) = lu.split_at_mut((k + 1) * n);
                let pivot_row = &top[k * n + k + 1..k * n + kend];
                for row in bottom.chunks_exact_mut(n) {
                    let l = row[k] / pivot;
                    row[k] = l;
                    if l != 0.0 {
                        for (x, u) in row[k + 1..kend].iter_mut().zip(pivot_row) {
                            *x -= l * u;
                        }
                    }
                }
            }
            if kend == n {
                break;
            }

            // U12 = L11^{-1} A12
            for k in kb..kend {
                let (top, bottom) = lu.split_at_mut((k + 1) * n);
                let src = &top[k * n + kend..(k + 1) * n];
                for row in bottom.chunks_exact_mut(n).take(kend - k - 1) {
                    let l = row[k];
                    if l != 0.0 {
                        for (x, u) in row[kend..].iter_mut().zip(src) {
                            *x -= l * u;
                        }
                    }
                }
            }

            // A22 -= L21 U12
            let (top, bottom) = lu.split_at_mut(kend * n);
            let upper = &top[kb * n..];
            bottom.par_chunks_mut(n).for_each(|row| {
                let mut j0 = kend;
                while j0 < n {
                    let j1 = (j0 + COLUMN_TILE).min(n);
                    for k in kb..kend {
                        let l = row[k];
                        if l != 0.0 {
                            let u = &upper[(k - kb) * n + j0..(k - kb) * n + j1];
                            for (x, u) in row[j0..j1].iter_mut().zip(u) {
                                *x -= l * u;
                            }
                        }
                    }
                    j0 = j1;
                }
            });
            kb = kend;
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}
