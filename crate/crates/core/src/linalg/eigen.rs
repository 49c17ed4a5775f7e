//! Eigenvalues of a general real matrix: balancing, Householder reduction to
//! upper Hessenberg form, then Francis double-shift QR on the Hessenberg
//! matrix. Eigenvectors come from inverse iteration.

use super::{LuFactors, Matrix};
use crate::error::{HbemError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn dist(self, other: Complex) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues of a square matrix, unordered.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex>> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(&mut h)
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable.
fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for x in a.row_mut(i) {
                        *x *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// In-place orthogonal similarity reduction to upper Hessenberg form.
pub fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let col: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        v[..m].copy_from_slice(&col);
        v[0] -= alpha;
        let vnorm = v[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v[..m] {
            *x /= vnorm;
        }

        // left: rows k+1..n, columns k..n
        w[k..n].iter_mut().for_each(|x| *x = 0.0);
        for (idx, i) in (k + 1..n).enumerate() {
            let vi = v[idx];
            for (wj, aij) in w[k..n].iter_mut().zip(&a.row(i)[k..n]) {
                *wj += vi * aij;
            }
        }
        for (idx, i) in (k + 1..n).enumerate() {
            let vi = 2.0 * v[idx];
            for (aij, wj) in a.row_mut(i)[k..n].iter_mut().zip(&w[k..n]) {
                *aij -= vi * wj;
            }
        }
        // right: all rows, columns k+1..n
        for i in 0..n {
            let row = &mut a.row_mut(i)[k + 1..n];
            let s: f64 = row.iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
            let s = 2.0 * s;
            for (x, vj) in row.iter_mut().zip(&v[..m]) {
                *x -= s * vj;
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
#[allow(unused_assignments)]
fn hqr(a: &mut Matrix) -> Result<Vec<Complex>> {
    let n = a.rows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut found = vec![false; n];
    if n == 0 {
        return Ok(Vec::new());
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    while nn >= 0 {
        let mut its = 0;
        let mut l;
        loop {
            let nu_now = nn as usize;
            l = nu_now;
            while l > 0 {
                s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nn_u = nu_now;
            x = a[(nn_u, nn_u)];
            if l == nn_u {
                wr[nn_u] = x + t;
                wi[nn_u] = 0.0;
                found[nn_u] = true;
                nn -= 1;
            } else {
                y = a[(nn_u - 1, nn_u - 1)];
                w = a[(nn_u, nn_u - 1)] * a[(nn_u - 1, nn_u)];
                if l == nn_u - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn_u - 1] = x + z;
                        wr[nn_u] = x + z;
                        if z != 0.0 {
                            wr[nn_u] = x - w / z;
                        }
                        wi[nn_u - 1] = 0.0;
                        wi[nn_u] = 0.0;
                    } else {
                        wr[nn_u - 1] = x + p;
                        wr[nn_u] = x + p;
                        wi[nn_u - 1] = z;
                        wi[nn_u] = -z;
                    }
                    found[nn_u] = true;
                    found[nn_u - 1] = true;
                    nn -= 2;
                } else {
                    if its >= MAX_SWEEPS_PER_EIGENVALUE {
                        let partial: Vec<(f64, f64)> = (0..n)
                            .filter(|&i| found[i])
                            .map(|i| (wr[i], wi[i]))
                            .collect();
                        return Err(HbemError::QrNoConvergence {
                            found: partial.len(),
                            total: n,
                            partial,
                        });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn_u {
                            a[(i, i)] -= x;
                        }
                        s = a[(nn_u, nn_u - 1)].abs() + a[(nn_u - 1, nn_u - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn_u - 2;
                    loop {
                        z = a[(m, m)];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
                        q = a[(m + 1, m + 1)] - z - r - s;
                        r = a[(m + 2, m + 1)];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn_u - 1 {
                        a[(i + 2, i)] = 0.0;
                        if i != m {
                            a[(i + 2, i - 1)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn_u {
                        if k != m {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = 0.0;
                            if k + 1 != nn_u {
                                r = a[(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn_u {
                                p = a[(k, j)] + q * a[(k + 1, j)];
                                if k + 1 != nn_u {
                                    p += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= p * z;
                                }
                                a[(k + 1, j)] -= p * y;
                                a[(k, j)] -= p * x;
                            }
                            let mmin = if nn_u < k + 3 { nn_u } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k + 1 != nn_u {
                                    p += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= p * r;
                                }
                                a[(i, k + 1)] -= p * q;
                                a[(i, k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(nn >= 0 && (l + 1) < nn as usize) {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex::new(re, im)).collect())
}

/// Unit-norm eigenvector for the real eigenvalue nearest `shift`, by inverse
/// iteration. Returns the vector and its Rayleigh quotient.
pub fn eigenvector_near(a: &Matrix, shift: f64) -> Result<(Vec<f64>, f64)> {
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    // nudge the shift so that an exact eigenvalue does not make the system singular
    let mut lu = None;
    for attempt in 0..4 {
        let sigma = shift + scale * 1e-10 * (1 + 10 * attempt) as f64;
        if let Ok(f) = LuFactors::factor(&a.shifted(-sigma)) {
            lu = Some(f);
            break;
        }
    }
    let lu = lu.ok_or(HbemError::SingularMatrix { column: 0 })?;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    normalize(&mut v);
    for _ in 0..100 {
        let mut next = lu.solve(&v);
        normalize(&mut next);
        // fix the sign so iterates can be compared
        let pivot = next
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        let change = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if change < 1e-13 {
            break;
        }
    }
    let av = a.matvec(&v);
    let rayleigh = av.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    Ok((v, rayleigh))
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
