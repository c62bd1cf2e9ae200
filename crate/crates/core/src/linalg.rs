//! Dense symmetric positive definite solves.

use faer::prelude::*;
use faer::{Mat, Side};

/// Above this size the blocked factorization of `faer` is used.
const SMALL: usize = 48;

/// Solves `H x = rhs` for symmetric positive definite `H` (row-major, `n x n`).
/// Returns `None` when the factorization breaks down.
pub fn spd_solve(n: usize, h: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(h.len(), n * n);
    if n == 0 {
        return Some(Vec::new());
    }
    if n <= SMALL {
        return small_cholesky_solve(n, h, rhs);
    }
    let mat = Mat::<f64>::from_fn(n, n, |i, j| h[i * n + j]);
    let chol = mat.cholesky(Side::Lower).ok()?;
    let mut b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    chol.solve_in_place(b.as_mut());
    let x: Vec<f64> = (0..n).map(|i| b.read(i, 0)).collect();
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn small_cholesky_solve(n: usize, h: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_and_large_systems() {
        for n in [3usize, 60] {
            let mut h = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
                }
                h[i * n + i] += n as f64;
            }
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let rhs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * x_true[j]).sum()).collect();
            let x = spd_solve(n, &h, &rhs).unwrap();
            for (a, b) in x.iter().zip(&x_true) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        assert!(spd_solve(2, &[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0]).is_none());
    }
}
