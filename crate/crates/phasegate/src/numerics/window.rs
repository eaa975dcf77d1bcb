use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Separable 2D Gaussian window with unit energy.
///
/// `coeffs` holds the per-axis factor; the 2D value at `(r, c)` is
/// `coeffs[r] * coeffs[c]`. Each axis factor has unit energy, so the 2D
/// window does too.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianWindow {
    pub size: usize,
    pub sigma: f64,
    coeffs: Vec<f64>,
}

/// Samples `exp(-(u - c)^2 / (2 sigma^2))` at `u = 0..size`, `c = (size - 1) / 2`,
/// and rescales to unit energy.
pub fn gaussian_window(size: usize, sigma: f64) -> Result<GaussianWindow> {
    if size == 0 {
        return param("window size must be >= 1");
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return param(format!(
            "window sigma must be positive and finite, got {sigma}"
        ));
    }
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|u| {
            let d = u as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return param(format!("window underflows for size {size}, sigma {sigma}"));
    }
    let coeffs: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    if coeffs.iter().any(|&v| !(v > 0.0)) {
        return param(format!("window sigma {sigma} too small for size {size}"));
    }
    Ok(GaussianWindow {
        size,
        sigma,
        coeffs,
    })
}

impl GaussianWindow {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.coeffs[r] * self.coeffs[c]
    }

    /// Row-major 2D window values.
    pub fn to_2d(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size * self.size);
        for &a in &self.coeffs {
            for &b in &self.coeffs {
                out.push(a * b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tap_is_one() {
        let w = gaussian_window(1, 0.3).unwrap();
        assert_eq!(w.coeffs(), &[1.0]);
    }

    #[test]
    fn flat_limit() {
        let w = gaussian_window(3, 1e6).unwrap();
        for &v in w.coeffs() {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn size_four_matches_closed_form() {
        let sigma = 4.0 / 6.0;
        let w = gaussian_window(4, sigma).unwrap();
        // offsets -1.5, -0.5, 0.5, 1.5
        let a = (-(1.5f64 * 1.5) / (2.0 * sigma * sigma)).exp();
        let b = (-(0.5f64 * 0.5) / (2.0 * sigma * sigma)).exp();
        let n = (2.0 * (a * a + b * b)).sqrt();
        let expect = [a / n, b / n, b / n, a / n];
        for (v, e) in w.coeffs().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
        let energy: f64 = w.to_2d().iter().map(|v| v * v).sum();
        assert!((energy - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_positive_peaked() {
        for size in [2, 5, 8, 13] {
            let w = gaussian_window(size, size as f64 / 6.0).unwrap();
            let c = w.coeffs();
            for i in 0..size {
                assert!(c[i] > 0.0);
                assert_eq!(c[i], c[size - 1 - i]);
                if i < size / 2 {
                    assert!(c[i] <= c[i + 1]);
                }
            }
        }
    }

    #[test]
    fn bad_sigma() {
        assert!(gaussian_window(4, 0.0).is_err());
        assert!(gaussian_window(4, -1.0).is_err());
        assert!(gaussian_window(0, 1.0).is_err());
    }
}
