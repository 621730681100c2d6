//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Pivots below this fraction of the matrix scale are treated as singular.
const PIVOT_RTOL: f64 = 1e-14;

/// Solve `A x = rhs` where `A` has sub-diagonal `lower` (`lower[0]` unused),
/// diagonal `diag` and super-diagonal `upper` (`upper[n-1]` unused).
pub fn tridiag_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidConfig(format!(
            "tridiagonal bands must share one non-zero length (lower {}, diag {n}, upper {}, rhs {})",
            lower.len(),
            upper.len(),
            rhs.len()
        )));
    }
    let scale = (0..n)
        .map(|i| {
            let l = if i > 0 { lower[i].abs() } else { 0.0 };
            let u = if i + 1 < n { upper[i].abs() } else { 0.0 };
            diag[i].abs() + l + u
        })
        .fold(0.0, f64::max);
    if !scale.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    let tiny = PIVOT_RTOL * scale;

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() <= tiny {
        return Err(Error::SingularPivot { row: 0, pivot });
    }
    c[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot.abs() <= tiny {
            return Err(Error::SingularPivot { row: i, pivot });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    if let Some(index) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(d)
}

/// `A x` for the banded matrix.
pub fn tridiag_apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i] * x[i];
            if i > 0 {
                s += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += upper[i] * x[i + 1];
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting, independent of the
    /// banded sweep.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn random_dominant(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * (lower[i].abs() + upper[i].abs() + rng.gen_range(0.5..2.0))
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        (lower, diag, upper, rhs)
    }

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.0, -2.0, 3.5, 0.25];
        let x = tridiag_solve(&[0.0; 4], &[1.0; 4], &[0.0; 4], &rhs).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn two_by_two() {
        let x = tridiag_solve(&[0.0, 1.0], &[2.0, 2.0], &[1.0, 0.0], &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_oracle_n50() {
        let n = 50;
        let (l, d, u, r) = random_dominant(n, 7);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = d[i];
            if i > 0 {
                dense[i][i - 1] = l[i];
            }
            if i + 1 < n {
                dense[i][i + 1] = u[i];
            }
        }
        let oracle = dense_solve(dense, r.clone());
        let x = tridiag_solve(&l, &d, &u, &r).unwrap();
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn singular_pivot_detected() {
        let err = tridiag_solve(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularPivot { row: 1, .. }));
        assert!(matches!(
            tridiag_solve(&[0.0], &[0.0], &[0.0], &[1.0]),
            Err(Error::SingularPivot { row: 0, .. })
        ));
    }

    #[test]
    fn large_system_residual() {
        let n = 100_000;
        let (l, d, u, r) = random_dominant(n, 99);
        let x = tridiag_solve(&l, &d, &u, &r).unwrap();
        let ax = tridiag_apply(&l, &d, &u, &x);
        let num: f64 = ax.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den < 1e-10);
    }

    proptest! {
        #[test]
        fn residual_small_on_dominant_systems(n in 1usize..200, seed in any::<u64>()) {
            let (l, d, u, r) = random_dominant(n, seed);
            let x = tridiag_solve(&l, &d, &u, &r).unwrap();
            let ax = tridiag_apply(&l, &d, &u, &x);
            for (a, b) in ax.iter().zip(&r) {
                prop_assert!((a - b).abs() <= 1e-12 * 10.0 * b.abs().max(1.0));
            }
        }
    }
}
