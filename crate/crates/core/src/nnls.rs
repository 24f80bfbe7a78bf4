//! Nonnegative least squares, Lawson–Hanson active-set method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `min ‖A x − b‖₂` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    let scale = a.amax().max(b.amax()).max(1.0);
    let tol = 10.0 * f64::EPSILON * scale * scale * (m.max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            let z = solve_passive(a, b, &passive);
            let blocking: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let step = blocking
                .iter()
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    Ok(x)
}

/// Unconstrained least squares on the passive columns, zeros elsewhere.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    let mut z = DVector::zeros(passive.len());
    for (k, &j) in cols.iter().enumerate() {
        z[j] = sol[k];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact NNLS by enumerating supports: the optimum is the best
    /// unconstrained fit over a column subset that comes out nonnegative.
    fn brute_force(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
        let n = a.ncols();
        let mut best = b.norm_squared();
        for mask in 1u32..(1 << n) {
            let passive: Vec<bool> = (0..n).map(|j| mask & (1 << j) != 0).collect();
            let z = solve_passive(a, b, &passive);
            if z.iter().all(|&v| v >= -1e-12) {
                best = best.min((a * z - b).norm_squared());
            }
        }
        best
    }

    #[test]
    fn matches_support_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let m = rng.random_range(2..8);
            let n = rng.random_range(1..6);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let x = nnls(&a, &b).unwrap();
            assert!(x.iter().all(|&v| v >= 0.0));
            let got = (&a * &x - &b).norm_squared();
            let want = brute_force(&a, &b);
            assert!(got <= want + 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn recovers_nonnegative_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[0.3, 0.7, 1.0]);
        let x = nnls(&a, &b).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-12 && (x[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn clamps_negative_directions() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_row_slice(&[-1.0, 2.0]);
        let x = nnls(&a, &b).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(nnls(&DMatrix::identity(2, 2), &DVector::zeros(3)).is_err());
    }
}
