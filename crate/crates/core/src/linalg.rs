//! Dense row-major kernels for small symmetric positive-definite systems.

use alloc::vec;
use alloc::vec::Vec;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place lower Cholesky factor of the `n x n` matrix `a`. The strict upper
/// triangle is zeroed. Returns `false` if `a` is not numerically positive
/// definite.
pub fn cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&a[i * n..i * n + j], &a[j * n..j * n + j]);
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return false;
                }
                a[i * n + i] = libm::sqrt(d);
            } else {
                a[i * n + j] = (a[i * n + j] - s) / a[j * n + j];
            }
        }
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `L x = b` in place.
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
pub fn solve_lower_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        b[i] /= l[i * n + i];
        let bi = b[i];
        for k in 0..i {
            b[k] -= l[i * n + k] * bi;
        }
    }
}

/// Solves `L L^T x = b` in place.
pub fn cho_solve(l: &[f64], n: usize, b: &mut [f64]) {
    solve_lower(l, n, b);
    solve_lower_t(l, n, b);
}

/// `(L L^T)^{-1}` as a full symmetric matrix.
pub fn cho_inverse(l: &[f64], n: usize) -> Vec<f64> {
    // Rows of `u` are the columns of L^{-1}: u[c][r] = (L^{-1})[r][c].
    let mut u = vec![0.0; n * n];
    for c in 0..n {
        let row = &mut u[c * n..(c + 1) * n];
        row[c] = 1.0 / l[c * n + c];
        for r in c + 1..n {
            let s = dot(&l[r * n + c..r * n + r], &row[c..r]);
            row[r] = -s / l[r * n + r];
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&u[i * n + j..(i + 1) * n], &u[j * n + j..(j + 1) * n]);
            inv[i * n + j] = v;
            inv[j * n + i] = v;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd() -> (Vec<f64>, usize) {
        let n = 4;
        let b = [1.0, 2.0, 0.5, -1.0, 0.0, 1.0, 3.0, 0.2, 1.5, -0.3, 1.0, 0.7, 0.1, 0.4, -2.0, 1.0];
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>()
                    + if i == j { 0.1 } else { 0.0 };
            }
        }
        (a, n)
    }

    #[test]
    fn factor_solve_invert() {
        let (a, n) = spd();
        let mut l = a.clone();
        assert!(cholesky(&mut l, n));
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                assert!((v - a[i * n + j]).abs() < 1e-12);
            }
        }
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let mut x = rhs;
        cho_solve(&l, n, &mut x);
        for i in 0..n {
            let v: f64 = (0..n).map(|k| a[i * n + k] * x[k]).sum();
            assert!((v - rhs[i]).abs() < 1e-10);
        }
        let inv = cho_inverse(&l, n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| a[i * n + k] * inv[k * n + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky(&mut a, 2));
    }
}
