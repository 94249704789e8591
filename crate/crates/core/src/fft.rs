//! Thin wrappers over `rustfft` for the zero-padded correlations used by the
//! estimators.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Forward transform of `x` zero-padded to `len`.
pub(crate) fn padded_spectrum(x: &[f64], len: usize) -> Vec<Complex64> {
    debug_assert!(x.len() <= len);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    forward(len).process(&mut buf);
    buf
}

/// `IFFT{ conj(A) * B } / len`, real part. With both inputs the transforms
/// of zero-padded sequences `a`, `b`, entry `m` (circularly) is
/// `sum_i a_i b_{i+m}`.
pub(crate) fn cross_correlate_spectra(a: &[Complex64], b: &[Complex64]) -> Vec<f64> {
    let len = a.len();
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
    inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// `IFFT{ |A|^2 } / len`, the circular autocorrelation.
pub(crate) fn auto_correlate_spectrum(a: &[Complex64]) -> Vec<f64> {
    let len = a.len();
    let mut buf: Vec<Complex64> = a.iter().map(|x| Complex64::new(x.norm_sqr(), 0.0)).collect();
    inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Reads lag `k` from a circular correlation record of length `len`.
#[inline]
pub(crate) fn at_lag(record: &[f64], k: i64) -> f64 {
    let len = record.len() as i64;
    record[k.rem_euclid(len) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_matches_direct_sum() {
        let a = [1.0, 2.0, -1.0];
        let b = [0.5, 0.0, 3.0, 1.0];
        let len = a.len() + b.len();
        let r = cross_correlate_spectra(&padded_spectrum(&a, len), &padded_spectrum(&b, len));
        for m in -(a.len() as i64 - 1)..(b.len() as i64) {
            let direct: f64 = (0..a.len() as i64)
                .filter(|i| (0..b.len() as i64).contains(&(i + m)))
                .map(|i| a[i as usize] * b[(i + m) as usize])
                .sum();
            assert!((at_lag(&r, m) - direct).abs() < 1e-12, "lag {m}");
        }
    }
}
