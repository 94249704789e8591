//! LU solve with partial pivoting plus a Hager/Higham 1-norm condition
//! estimate. The factorisation itself is nalgebra's.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

pub(crate) struct Solver {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    norm1: f64,
    n: usize,
}

impl Solver {
    pub(crate) fn new(a: &DMatrix<f64>) -> Self {
        let norm1 = (0..a.ncols())
            .map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            lu: a.clone().lu(),
            lu_t: a.transpose().lu(),
            norm1,
            n: a.nrows(),
        }
    }

    fn solve_raw(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(b).filter(|x| x.iter().all(|v| v.is_finite()))
    }

    fn solve_transposed(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu_t.solve(b).filter(|x| x.iter().all(|v| v.is_finite()))
    }

    /// Estimate of `||A||_1 ||A^-1||_1`; infinite for an exactly singular
    /// factorisation.
    pub(crate) fn condition_estimate(&self) -> f64 {
        match self.inverse_norm1_estimate() {
            Some(inv) => self.norm1 * inv,
            None => f64::INFINITY,
        }
    }

    // Hager's algorithm as refined by Higham (LAPACK xLACON without the
    // final alternating-sign safeguard).
    fn inverse_norm1_estimate(&self) -> Option<f64> {
        let n = self.n;
        if n == 0 {
            return Some(0.0);
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve_raw(&x)?;
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transposed(&xi)?;
            let (j, zmax) = z.iter().enumerate().fold(
                (0, f64::MIN),
                |acc, (i, v)| {
                    if v.abs() > acc.1 {
                        (i, v.abs())
                    } else {
                        acc
                    }
                },
            );
            if zmax <= z.dot(&x) || j == last_j {
                break;
            }
            last_j = j;
            x = DVector::zeros(n);
            x[j] = 1.0;
        }
        // alternative lower bound from a structured right-hand side
        let alt = DVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        });
        let y = self.solve_raw(&alt)?;
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        Some(estimate.max(alt_est))
    }

    /// Solves `A x = b`, refusing systems whose condition estimate exceeds
    /// `threshold`. Returns the solution and the estimate.
    pub(crate) fn solve_checked(&self, b: &[f64], threshold: f64) -> Result<(Vec<f64>, f64)> {
        let condition = self.condition_estimate();
        if condition.is_nan() || condition > threshold {
            return Err(Error::IllConditioned { condition, threshold });
        }
        let x = self
            .solve_raw(&DVector::from_column_slice(b))
            .ok_or(Error::IllConditioned {
                condition: f64::INFINITY,
                threshold,
            })?;
        Ok((x.as_slice().to_vec(), condition))
    }
}
