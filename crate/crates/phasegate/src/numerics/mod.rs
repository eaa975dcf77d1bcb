//! Dense grids, Fourier transforms, windows, random streams and statistics.

mod fft;
mod grid;
mod rng;
pub mod stats;
mod sum;
pub mod synth;
mod window;

pub use fft::{dft1, dft2, dft2_centered, fftshift, ifftshift, Fft2};
pub use grid::{Element, Grid2, Grid2C, Grid2R};
pub use num_complex::Complex64;
pub use rng::{derive_seed, poisson_quantile, Rng};
pub use stats::{ols_pearson, FitResult};
pub use sum::{kahan_sum, NeumaierSum};
pub use window::{gaussian_window, GaussianWindow};
