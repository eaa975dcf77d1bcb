//! Seeded synthetic fields used by experiments and tests.

use num_complex::Complex64;

use super::fft::Fft2;
use super::grid::{Grid2C, Grid2R};
use super::rng::Rng;
use super::sum::kahan_sum;
use crate::error::Result;

/// I.i.d. standard normal samples in row-major order.
pub fn white_gaussian(rows: usize, cols: usize, rng: &mut Rng) -> Result<Grid2R> {
    Grid2R::from_fn(rows, cols, |_, _| rng.gauss())
}

/// Signed frequency in cycles per sample for DFT index `i` of length `n`.
fn freq(i: usize, n: usize) -> f64 {
    let k = if i <= (n - 1) / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    k / n as f64
}

/// Stationary Gaussian field with power spectrum `|k|^-beta`, standardized
/// to zero mean and unit (population) variance.
///
/// White noise is filtered in the Fourier domain by `|k|^(-beta/2)`; the DC
/// radius is replaced by `1 / max(rows, cols)` before the power is taken.
pub fn power_law_field(rows: usize, cols: usize, beta: f64, rng: &mut Rng) -> Result<Grid2R> {
    let noise = white_gaussian(rows, cols, rng)?;
    let plan = Fft2::new(rows, cols)?;
    let mut data: Vec<Complex64> = noise
        .as_slice()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    let mut scratch = Vec::new();
    plan.process(&mut data, false, &mut scratch);
    let r0 = 1.0 / rows.max(cols) as f64;
    for r in 0..rows {
        let fy = freq(r, rows);
        for c in 0..cols {
            let fx = freq(c, cols);
            let mut rad = (fx * fx + fy * fy).sqrt();
            if r == 0 && c == 0 {
                rad = r0;
            }
            data[r * cols + c] *= rad.powf(-beta / 2.0);
        }
    }
    plan.process(&mut data, true, &mut scratch);
    let re: Vec<f64> = data.iter().map(|v| v.re).collect();
    let n = re.len() as f64;
    let m = kahan_sum(re.iter().copied()) / n;
    let sd = (kahan_sum(re.iter().map(|x| (x - m) * (x - m))) / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    Grid2R::from_vec(rows, cols, re.iter().map(|x| (x - m) / sd).collect())
}

/// Real field lifted to complex with an additive offset.
pub fn with_offset(g: &Grid2R, offset: f64) -> Grid2C {
    Grid2C::from_raw(
        g.rows(),
        g.cols(),
        g.as_slice()
            .iter()
            .map(|&x| Complex64::new(x + offset, 0.0))
            .collect(),
    )
}
