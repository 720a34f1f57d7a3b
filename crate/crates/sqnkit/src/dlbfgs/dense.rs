//! Dense reference path for the damped L-BFGS operator.
//!
//! [`dense_operator`] materializes H by applying the rank-two recursion
//! pair by pair. It is the independent oracle the two-loop recursion is
//! checked against in tests; nothing in the solvers calls it.

use crate::dlbfgs::LbfgsMemory;
use crate::numerics::ParameterVector;

/// Small dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = DenseMatrix {
            n,
            data: vec![0.0; n * n],
        };
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Largest absolute asymmetry `|H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// One damped BFGS inverse update:
    /// `H <- (I - rho s y') H (I - rho y s') + rho s s'`.
    pub fn apply_inverse_update(&self, s: &[f64], y_bar: &[f64], rho: f64) -> DenseMatrix {
        let n = self.n;
        assert_eq!(s.len(), n);
        assert_eq!(y_bar.len(), n);
        // A = H - rho * s (H y)'   (H symmetric, so y'H = (H y)')
        let hy = self.matvec(y_bar);
        let mut a = self.clone();
        for (i, &si) in s.iter().enumerate() {
            for (j, &hyj) in hy.iter().enumerate() {
                a.data[i * n + j] -= rho * si * hyj;
            }
        }
        // H+ = A - rho (A y) s' + rho s s'
        let ay = a.matvec(y_bar);
        let mut out = a;
        for i in 0..n {
            let row = rho * (s[i] - ay[i]);
            for (j, &sj) in s.iter().enumerate() {
                out.data[i * n + j] += row * sj;
            }
        }
        out
    }

    /// Cholesky factor of a symmetric matrix, or None when it is not
    /// positive definite.
    pub fn cholesky(&self) -> Option<DenseMatrix> {
        let n = self.n;
        let mut l = DenseMatrix {
            n,
            data: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l.set(i, j, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
    /// ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.data.clone();
        // Symmetrize first; inputs are symmetric up to rounding.
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = m;
                a[j * n + i] = m;
            }
        }
        let frobenius: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-15 * frobenius.max(1.0);
        for _sweep in 0..100 {
            let mut off: f64 = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= tol * 1e-2 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }
}

/// Materializes the damped L-BFGS operator `H` by applying the recursion
/// over the stored pairs, oldest first, from `H_0 = gamma^{-1} I`.
pub fn dense_operator(memory: &LbfgsMemory, gamma: f64, n: usize) -> DenseMatrix {
    let mut h = DenseMatrix::scaled_identity(n, 1.0 / gamma);
    for pair in memory.pairs() {
        h = h.apply_inverse_update(pair.s().as_slice(), pair.y_bar().as_slice(), pair.rho());
    }
    h
}

/// Applies the dense operator to a vector (test convenience).
pub fn dense_apply(memory: &LbfgsMemory, gamma: f64, g: &ParameterVector) -> ParameterVector {
    let h = dense_operator(memory, gamma, g.len());
    ParameterVector::new(h.matvec(g.as_slice())).expect("dense operator produced non-finite")
}
