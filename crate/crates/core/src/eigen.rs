//! Cyclic Jacobi eigenvalues for dense symmetric matrices.

use crate::{Error, Result};

pub const OFF_RTOL: f64 = 1e-13;
pub const MAX_SWEEPS: usize = 60;

/// Dense row-major symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// `(B + Bᵀ)/2` of a square row-major `B`.
    pub fn symmetric_part(n: usize, b: &[f64]) -> Result<Self> {
        if b.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, found: b.len() });
        }
        let mut s = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                s.data[i * n + j] = 0.5 * (b[i * n + j] + b[j * n + i]);
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn off_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let target = OFF_RTOL * self.frobenius();
        let mut converged = n < 2;
        let mut sweeps = 0;
        while !converged {
            if sweeps == MAX_SWEEPS {
                let off = SymMatrix { n, data: a }.off_norm();
                return Err(Error::NoConvergence { sweeps, off });
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut a, n, p, q);
                }
            }
            let off = SymMatrix { n, data: a.clone() }.off_norm();
            converged = off < target || off == 0.0;
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(|x, y| x.total_cmp(y));
        Ok(eig)
    }
}

/// One Jacobi rotation annihilating `a[p][q]` (Rutishauser's formulation).
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let tau = s / (1.0 + c);
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        a[r * n + p] = new_rp;
        a[p * n + r] = new_rp;
        a[r * n + q] = new_rq;
        a[q * n + r] = new_rq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let s = SymMatrix::symmetric_part(2, &[1.0, 0.0, 3.0, 1.0]).unwrap();
        let e = s.eigenvalues().unwrap();
        assert!((e[0] + 0.5).abs() < 1e-15 && (e[1] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_is_immediate() {
        let s = SymMatrix::symmetric_part(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.eigenvalues().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn second_difference_matrix() {
        // tridiag(-1, 2, -1): λ_k = 2 - 2cos(kπ/(n+1))
        let n = 12;
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            b[i * n + i] = 2.0;
            if i + 1 < n {
                b[i * n + i + 1] = -1.0;
                b[(i + 1) * n + i] = -1.0;
            }
        }
        let e = SymMatrix::symmetric_part(n, &b).unwrap().eigenvalues().unwrap();
        for (k, v) in e.iter().enumerate() {
            let want = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-13, "k={k}: {v} vs {want}");
        }
    }

    #[test]
    fn trace_is_preserved() {
        let n = 7;
        let b: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let s = SymMatrix::symmetric_part(n, &b).unwrap();
        let tr: f64 = (0..n).map(|i| s.get(i, i)).sum();
        let sum: f64 = s.eigenvalues().unwrap().iter().sum();
        assert!((tr - sum).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        assert!(SymMatrix::symmetric_part(3, &[1.0; 8]).is_err());
    }
}
