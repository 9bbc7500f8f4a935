//! Tridiagonal solve by Gaussian elimination with partial pivoting, in the
//! style of LAPACK `gtsv`.
//!
//! Plain Thomas elimination breaks down on matrices like
//! `tridiag(1, -2 cos(theta), 1)` whenever a leading minor vanishes, even
//! though the full matrix is regular; row interchanges avoid that.

/// Solves `T x = b` where `T` has sub-diagonal `sub` (length `n-1`),
/// diagonal `diag` (length `n`) and super-diagonal `sup` (length `n-1`).
/// Returns `None` when a pivot is exactly zero or the result is not finite.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(rhs.len() == n && (n == 0 || (sub.len() == n - 1 && sup.len() == n - 1)));
    if n == 0 {
        return Some(Vec::new());
    }
    let dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    // second super-diagonal of U created by interchanges
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return None;
    }

    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for j in (0..n.saturating_sub(2)).rev() {
        b[j] = (b[j] - du[j] * b[j + 1] - du2[j] * b[j + 2]) / d[j];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
            b[k] = (b[k] - s) / a[k][k];
        }
        b
    }

    fn dense(sub: &[f64], diag: &[f64], sup: &[f64]) -> Vec<Vec<f64>> {
        let n = diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i + 1 < n {
                a[i + 1][i] = sub[i];
                a[i][i + 1] = sup[i];
            }
        }
        a
    }

    #[test]
    fn zero_leading_minor() {
        // leading 1x1 block is zero, full matrix is regular
        let x = solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0 - 2.0, 2.0]);
        // tridiag(1, 0, 1) of size 3 is singular, size 4 is not
        assert!(solve_tridiagonal(&[1.0; 2], &[0.0; 3], &[1.0; 2], &[1.0; 3]).is_none());
        assert!(solve_tridiagonal(&[1.0; 3], &[0.0; 4], &[1.0; 3], &[1.0; 4]).is_some());
    }

    #[test]
    fn small_sizes() {
        assert_eq!(solve_tridiagonal(&[], &[], &[], &[]), Some(vec![]));
        assert_eq!(solve_tridiagonal(&[], &[4.0], &[], &[2.0]), Some(vec![0.5]));
        assert!(solve_tridiagonal(&[], &[0.0], &[], &[2.0]).is_none());
    }

    proptest! {
        #[test]
        fn matches_dense_solve(
            n in 1usize..12,
            theta in 0.05f64..3.1,
            seed in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let diag = vec![-2.0 * theta.cos(); n];
            let off = vec![1.0; n.saturating_sub(1)];
            let rhs = seed[..n].to_vec();
            let det_scale = ((n + 1) as f64 * theta).sin() / theta.sin();
            prop_assume!(det_scale.abs() > 1e-3);
            let x = solve_tridiagonal(&off, &diag, &off, &rhs).unwrap();
            let y = dense_solve(dense(&off, &diag, &off), rhs);
            let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
            }
        }
    }
}
