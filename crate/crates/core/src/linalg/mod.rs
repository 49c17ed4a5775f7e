//! Dense linear algebra kept in-repo: row-major matrices, LU with partial
//! pivoting, and eigenvalues of nonsymmetric and symmetric 3x3 matrices.

mod eigen;
mod lu;
mod matrix;
mod sym3;

pub use eigen::{eigenvalues, eigenvector_near, hessenberg, Complex};
pub use lu::LuFactors;
pub use matrix::Matrix;
pub use sym3::symmetric_eigenvalues_3x3;

/// Exactly rounded sum (Shewchuk's non-overlapping partials).
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    partials.iter().rev().sum()
}

/// `max_i |v_i|`.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_cancels() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1, 0.2, -0.1, -0.2]), 0.0);
        let naive: f64 = [0.1, 0.2, 0.3, -0.6].iter().sum();
        assert_ne!(naive, 0.0);
        // the stored doubles do not sum to zero; their exact sum is 2^-55
        assert_eq!(exact_sum([0.1, 0.2, 0.3, -0.6]), 2f64.powi(-55));
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }
}
