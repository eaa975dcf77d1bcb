use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{checked_len, Grid2C};
use crate::error::Result;

/// Reusable plan for unnormalized 2D transforms of one shape.
///
/// Arbitrary lengths are supported (mixed radix with Bluestein fallback).
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        checked_len(rows, cols)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// In-place unnormalized transform of a row-major buffer.
    ///
    /// `scratch` is resized as needed; pass the same vector across calls to
    /// avoid reallocating.
    pub fn process(&self, data: &mut [Complex64], inverse: bool, scratch: &mut Vec<Complex64>) {
        assert_eq!(
            data.len(),
            self.rows * self.cols,
            "buffer does not match plan shape"
        );
        let (row_plan, col_plan) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        run(row_plan.as_ref(), data, scratch);
        if self.rows > 1 {
            let mut t = transpose(data, self.rows, self.cols);
            run(col_plan.as_ref(), &mut t, scratch);
            let back = transpose(&t, self.cols, self.rows);
            data.copy_from_slice(&back);
        }
    }
}

fn run(plan: &dyn Fft<f64>, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let need = plan.get_inplace_scratch_len();
    if scratch.len() < need {
        scratch.resize(need, Complex64::new(0.0, 0.0));
    }
    plan.process_with_scratch(data, &mut scratch[..need]);
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Orthonormal 2D DFT with the zero frequency at index (0, 0).
pub fn dft2(g: &Grid2C, inverse: bool) -> Result<Grid2C> {
    let plan = Fft2::new(g.rows(), g.cols())?;
    let mut data = g.as_slice().to_vec();
    plan.process(&mut data, inverse, &mut Vec::new());
    let s = 1.0 / ((g.rows() * g.cols()) as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= s);
    Ok(Grid2C::from_raw(g.rows(), g.cols(), data))
}

/// Orthonormal 2D DFT with zero frequency at the array centre.
///
/// Computes `fftshift(F(ifftshift(x)))` on both axes, so index
/// `(rows / 2, cols / 2)` holds the DC term and a delta there maps to a
/// constant.
pub fn dft2_centered(g: &Grid2C, inverse: bool) -> Result<Grid2C> {
    let shifted = ifftshift(g);
    Ok(fftshift(&dft2(&shifted, inverse)?))
}

fn roll(g: &Grid2C, dr: usize, dc: usize) -> Grid2C {
    let (rows, cols) = g.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let sr = (r + rows - dr) % rows;
        for c in 0..cols {
            out.push(g.get(sr, (c + cols - dc) % cols));
        }
    }
    Grid2C::from_raw(rows, cols, out)
}

/// Moves index 0 to the centre on both axes.
pub fn fftshift(g: &Grid2C) -> Grid2C {
    roll(g, g.rows() / 2, g.cols() / 2)
}

/// Inverse of [`fftshift`]; differs from it for odd lengths.
pub fn ifftshift(g: &Grid2C) -> Grid2C {
    roll(g, g.rows() - g.rows() / 2, g.cols() - g.cols() / 2)
}

/// Orthonormal 1D DFT, zero frequency at index 0.
pub fn dft1(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(x.len())
    } else {
        planner.plan_fft_forward(x.len())
    };
    let mut data = x.to_vec();
    plan.process(&mut data);
    let s = 1.0 / (x.len() as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= s);
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn naive_dft2(g: &Grid2C, inverse: bool) -> Vec<Complex64> {
        let (m, n) = g.shape();
        let sign = if inverse { 1.0 } else { -1.0 };
        let mut out = vec![Complex64::new(0.0, 0.0); m * n];
        for u in 0..m {
            for v in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    for c in 0..n {
                        let ph = sign
                            * 2.0
                            * PI
                            * ((u * r) as f64 / m as f64 + (v * c) as f64 / n as f64);
                        acc += g.get(r, c) * Complex64::from_polar(1.0, ph);
                    }
                }
                out[u * n + v] = acc / ((m * n) as f64).sqrt();
            }
        }
        out
    }

    fn noise(rows: usize, cols: usize, seed: u64) -> Grid2C {
        let mut rng = Rng::new(seed);
        Grid2C::from_fn(rows, cols, |_, _| Complex64::new(rng.gauss(), rng.gauss())).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn point_grid_is_identity() {
        let g = Grid2C::from_vec(1, 1, vec![Complex64::new(2.5, -1.0)]).unwrap();
        assert_eq!(dft2_centered(&g, false).unwrap(), g);
    }

    #[test]
    fn centred_delta_gives_constant_quarter() {
        let mut d = vec![Complex64::new(0.0, 0.0); 16];
        d[2 * 4 + 2] = Complex64::new(1.0, 0.0);
        let g = Grid2C::from_vec(4, 4, d).unwrap();
        let f = dft2_centered(&g, false).unwrap();
        for v in f.as_slice() {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn eight_by_eight_matches_naive_and_round_trips() {
        let g = noise(8, 8, 11);
        let f = dft2(&g, false).unwrap();
        assert!(max_diff(f.as_slice(), &naive_dft2(&g, false)) < 1e-12);
        let back = dft2_centered(&dft2_centered(&g, false).unwrap(), true).unwrap();
        assert!(max_diff(back.as_slice(), g.as_slice()) < 1e-12);
        let e = g.energy();
        assert!((dft2_centered(&g, false).unwrap().energy() - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn centred_transform_matches_shifted_naive_for_odd_sizes() {
        let g = noise(5, 7, 3);
        let expected = fftshift(&Grid2C::from_raw(5, 7, naive_dft2(&ifftshift(&g), false)));
        let got = dft2_centered(&g, false).unwrap();
        assert!(max_diff(got.as_slice(), expected.as_slice()) < 1e-12);
        assert_eq!(ifftshift(&fftshift(&g)), g);
    }

    #[test]
    fn dft1_matches_row_of_dft2() {
        let g = noise(1, 9, 5);
        let a = dft1(g.as_slice(), false);
        let b = dft2(&g, false).unwrap();
        assert!(max_diff(&a, b.as_slice()) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn naive_oracle_agreement(rows in 1usize..=16, cols in 1usize..=16, seed in any::<u64>(), inv in any::<bool>()) {
            let g = noise(rows, cols, seed);
            let f = dft2(&g, inv).unwrap();
            prop_assert!(max_diff(f.as_slice(), &naive_dft2(&g, inv)) < 1e-8);
        }

        #[test]
        fn parseval_and_round_trip(rows in 1usize..=40, cols in 1usize..=40, seed in any::<u64>()) {
            let g = noise(rows, cols, seed);
            let f = dft2_centered(&g, false).unwrap();
            let e = g.energy();
            prop_assert!((f.energy() - e).abs() <= 1e-10 * e);
            let back = dft2_centered(&f, true).unwrap();
            let err = kahan(back.as_slice(), g.as_slice());
            prop_assert!(err <= 1e-10 * e.sqrt());
        }

        #[test]
        fn linearity(rows in 1usize..=12, cols in 1usize..=12, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = noise(rows, cols, seed);
            let g = noise(rows, cols, seed ^ 0xABCD);
            let (ca, cb) = (Complex64::new(a, 0.5), Complex64::new(-0.25, b));
            let mix = Grid2C::from_fn(rows, cols, |r, c| ca * f.get(r, c) + cb * g.get(r, c)).unwrap();
            let lhs = dft2_centered(&mix, false).unwrap();
            let (ff, gg) = (dft2_centered(&f, false).unwrap(), dft2_centered(&g, false).unwrap());
            let rhs: Vec<_> = ff.as_slice().iter().zip(gg.as_slice()).map(|(x, y)| ca * x + cb * y).collect();
            prop_assert!(max_diff(lhs.as_slice(), &rhs) < 1e-10);
        }
    }

    fn kahan(a: &[Complex64], b: &[Complex64]) -> f64 {
        crate::numerics::kahan_sum(a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr())).sqrt()
    }
}
