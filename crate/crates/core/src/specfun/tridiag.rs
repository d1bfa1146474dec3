//! Symmetric tridiagonal eigenproblem by implicit QL with Wilkinson shifts.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 60;

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `j` is the unit eigenvector of `values[j]`.
    vectors: Vec<f64>,
    n: usize,
}

impl TridiagonalEigen {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

/// Solves `T v = lambda v` for `T` with main diagonal `diag` and
/// sub/super-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn solve(diag: &[f64], off: &[f64]) -> Result<TridiagonalEigen> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length must be n - 1");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITERATIONS {
                return Err(diagnostics(diag, off, l, iter));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk = &mut z[k * n..(k + 1) * n];
                    let f = zk[i + 1];
                    zk[i + 1] = s * zk[i] + c * f;
                    zk[i] = c * zk[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + col] = z[i * n + j];
        }
    }
    Ok(TridiagonalEigen { values, vectors, n })
}

fn diagnostics(diag: &[f64], off: &[f64], index: usize, iterations: usize) -> Error {
    Error::EigenSolver {
        size: diag.len(),
        index,
        iterations,
        diag_min: diag.iter().copied().fold(f64::INFINITY, f64::min),
        diag_max: diag.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        offdiag_max: off.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(diag: &[f64], off: &[f64], v: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * v[i];
                if i > 0 {
                    s += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn two_by_two() {
        let eig = solve(&[2.0, 2.0], &[1.0]).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let v = eig.vector(1);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((v[0] - v[1]).abs() < 1e-14);
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        // tridiag(-1, 2, -1) has eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 40;
        let eig = solve(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, &v) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn already_diagonal() {
        let eig = solve(&[3.0, -1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
        assert_eq!(eig.vector(0), vec![0.0, 1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn residuals_and_orthonormality(
            diag in prop::collection::vec(-50.0f64..50.0, 2..30),
            seed in prop::collection::vec(-10.0f64..10.0, 29),
        ) {
            let n = diag.len();
            let off = &seed[..n - 1];
            let eig = solve(&diag, off).unwrap();
            let scale = diag.iter().map(|v| v.abs()).fold(1.0, f64::max) + 20.0;
            for j in 0..n {
                let v = eig.vector(j);
                let tv = apply(&diag, off, &v);
                for i in 0..n {
                    prop_assert!((tv[i] - eig.values[j] * v[i]).abs() < 1e-11 * scale);
                }
                for k in 0..n {
                    let w = eig.vector(k);
                    let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                    let want = if j == k { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-12);
                }
            }
            prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
