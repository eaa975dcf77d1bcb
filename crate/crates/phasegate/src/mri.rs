//! Multi-coil Cartesian MRI emulation.
//!
//! k-space grids use the centered convention: the zero frequency sits at
//! `(rows / 2, cols / 2)` and images are recovered with the centered
//! orthonormal inverse DFT. Phase encoding runs along the last axis, so line
//! masks select columns.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{param, Error, Result};
use crate::masks::{apply_mask, Mask};
use crate::numerics::{dft2_centered, gaussian_window, kahan_sum, Grid2C, Grid2R, Rng};
use crate::phase_space::{delta_s, HusimiParams, Weighting};

/// Per-coil centered k-space sharing one shape.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCoilKSpace {
    data: Vec<Grid2C>,
}

impl MultiCoilKSpace {
    pub fn new(data: Vec<Grid2C>) -> Result<Self> {
        let first = data
            .first()
            .ok_or_else(|| Error::Param("at least one coil is required".into()))?;
        for g in &data[1..] {
            first.ensure_same_shape(g)?;
        }
        Ok(Self { data })
    }

    pub fn coils(&self) -> usize {
        self.data.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data[0].shape()
    }

    pub fn data(&self) -> &[Grid2C] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Grid2C> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        kahan_sum(self.data.iter().map(Grid2C::energy))
    }

    pub fn masked(&self, m: &Mask) -> Result<Self> {
        let data = self
            .data
            .iter()
            .map(|g| apply_mask(g, m))
            .collect::<Result<_>>()?;
        Ok(Self { data })
    }
}

/// Magnitude image divided by `norm_factor`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeImage {
    pub grid: Grid2R,
    pub norm_factor: f64,
}

impl MagnitudeImage {
    pub fn to_field(&self) -> Grid2C {
        self.grid.to_complex()
    }
}

fn rss_raw(k: &MultiCoilKSpace) -> Result<Grid2R> {
    let (rows, cols) = k.shape();
    let images: Vec<Grid2C> = k
        .data
        .par_iter()
        .map(|g| dft2_centered(g, true))
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; rows * cols];
    for img in &images {
        for (a, v) in acc.iter_mut().zip(img.as_slice()) {
            *a += v.norm_sqr();
        }
    }
    Grid2R::from_vec(rows, cols, acc.into_iter().map(f64::sqrt).collect())
}

/// RSS image normalized by its own maximum.
pub fn rss_reconstruct(k: &MultiCoilKSpace) -> Result<MagnitudeImage> {
    let raw = rss_raw(k)?;
    let norm = raw.max_abs();
    if !(norm > 0.0) {
        return Err(Error::Degenerate(
            "all-zero k-space has no normalization".into(),
        ));
    }
    Ok(MagnitudeImage {
        grid: raw.try_map(|v| v / norm)?,
        norm_factor: norm,
    })
}

/// RSS image divided by a caller-supplied factor.
pub fn rss_with_norm(k: &MultiCoilKSpace, norm: f64) -> Result<MagnitudeImage> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Degenerate(format!(
            "normalization factor {norm} is not positive"
        )));
    }
    let raw = rss_raw(k)?;
    Ok(MagnitudeImage {
        grid: raw.try_map(|v| v / norm)?,
        norm_factor: norm,
    })
}

/// Masks every coil and reconstructs on the reference scale.
pub fn zero_fill(k: &MultiCoilKSpace, m: &Mask, reference_norm: f64) -> Result<MagnitudeImage> {
    rss_with_norm(&k.masked(m)?, reference_norm)
}

/// `10 log10(peak^2 / MSE)`; identical images give `f64::INFINITY`.
pub fn psnr(a: &MagnitudeImage, b: &MagnitudeImage, peak: f64) -> Result<f64> {
    a.grid.ensure_same_shape(&b.grid)?;
    let mse = kahan_sum(
        a.grid
            .as_slice()
            .iter()
            .zip(b.grid.as_slice())
            .map(|(x, y)| (x - y) * (x - y)),
    ) / a.grid.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

pub const SSIM_WIN: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Separable valid-mode correlation with a normalized 1D kernel.
fn filter_valid(x: &[f64], rows: usize, cols: usize, k: &[f64]) -> Vec<f64> {
    let w = k.len();
    let (orows, ocols) = (rows - w + 1, cols - w + 1);
    let mut tmp = vec![0.0; rows * ocols];
    for r in 0..rows {
        for c in 0..ocols {
            tmp[r * ocols + c] = (0..w).map(|i| k[i] * x[r * cols + c + i]).sum();
        }
    }
    let mut out = vec![0.0; orows * ocols];
    for r in 0..orows {
        for c in 0..ocols {
            out[r * ocols + c] = (0..w).map(|i| k[i] * tmp[(r + i) * ocols + c]).sum();
        }
    }
    out
}

/// Mean local SSIM over all full 11x11 Gaussian windows, dynamic range 1.
pub fn ssim(a: &MagnitudeImage, b: &MagnitudeImage) -> Result<f64> {
    a.grid.ensure_same_shape(&b.grid)?;
    let (rows, cols) = a.grid.shape();
    if rows < SSIM_WIN || cols < SSIM_WIN {
        return param(format!(
            "SSIM needs at least {SSIM_WIN}x{SSIM_WIN}, got {rows}x{cols}"
        ));
    }
    let g = gaussian_window(SSIM_WIN, SSIM_SIGMA)?;
    let total: f64 = g.coeffs().iter().sum();
    let k: Vec<f64> = g.coeffs().iter().map(|v| v / total).collect();
    let x = a.grid.as_slice();
    let y = b.grid.as_slice();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        x.iter().zip(y).map(|(&p, &q)| f(p, q)).collect()
    };
    let mx = filter_valid(x, rows, cols, &k);
    let my = filter_valid(y, rows, cols, &k);
    let mxx = filter_valid(&prod(&|p, _| p * p), rows, cols, &k);
    let myy = filter_valid(&prod(&|_, q| q * q), rows, cols, &k);
    let mxy = filter_valid(&prod(&|p, q| p * q), rows, cols, &k);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let vals = (0..mx.len()).map(|i| {
        let (ux, uy) = (mx[i], my[i]);
        let vx = mxx[i] - ux * ux;
        let vy = myy[i] - uy * uy;
        let cxy = mxy[i] - ux * uy;
        ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    });
    Ok(kahan_sum(vals) / mx.len() as f64)
}

/// Relative L2 norm of the k-space energy a mask discards.
pub fn kspace_l2(k_full: &MultiCoilKSpace, m: &Mask) -> Result<f64> {
    if k_full.shape() != m.shape() {
        return Err(Error::ShapeMismatch {
            left: k_full.shape(),
            right: m.shape(),
        });
    }
    let total = k_full.energy();
    if !(total > 0.0) {
        return Err(Error::Degenerate(
            "reference k-space has zero energy".into(),
        ));
    }
    let dropped = kahan_sum(k_full.data.iter().flat_map(|g| {
        g.as_slice()
            .iter()
            .zip(m.kept())
            .filter(|(_, &keep)| !keep)
            .map(|(v, _)| v.norm_sqr())
    }));
    Ok((dropped / total).sqrt())
}

/// PSNR values are written as at most this many dB.
pub const PSNR_CAP_DB: f64 = 200.0;

pub fn serialize_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(v.min(PSNR_CAP_DB))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MriMetrics {
    #[serde(serialize_with = "serialize_psnr")]
    pub psnr_db: f64,
    pub ssim: f64,
    pub kspace_l2: f64,
    pub abs_delta_s: f64,
}

/// Reference image, zero-filled image and all pre-reconstruction metrics.
pub fn evaluate_mask(
    k_full: &MultiCoilKSpace,
    m: &Mask,
    p: &HusimiParams,
    weighting: Weighting,
) -> Result<MriMetrics> {
    let full = rss_reconstruct(k_full)?;
    evaluate_against(k_full, &full, m, p, weighting)
}

/// As [`evaluate_mask`] with the fully sampled image already computed.
pub fn evaluate_against(
    k_full: &MultiCoilKSpace,
    full: &MagnitudeImage,
    m: &Mask,
    p: &HusimiParams,
    weighting: Weighting,
) -> Result<MriMetrics> {
    let zf = zero_fill(k_full, m, full.norm_factor)?;
    let ds = delta_s(&full.to_field(), &zf.to_field(), p, weighting)?;
    Ok(MriMetrics {
        psnr_db: psnr(full, &zf, 1.0)?,
        ssim: ssim(full, &zf)?,
        kspace_l2: kspace_l2(k_full, m)?,
        abs_delta_s: ds.abs_delta,
    })
}

/// Ellipses `(intensity, semi-axis x, semi-axis y, centre x, centre y, angle in degrees)`.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

fn linspace(i: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -1.0 + 2.0 * i as f64 / (n - 1) as f64
    }
}

/// Seeded ellipse phantom with jittered geometry and a gentle linear shading.
pub fn phantom_image(rows: usize, cols: usize, seed: u64) -> Result<Grid2R> {
    if rows < 32 || cols < 32 {
        return param(format!("phantom needs at least 32x32, got {rows}x{cols}"));
    }
    let mut rng = Rng::new(seed);
    let shapes: Vec<_> = ELLIPSES
        .iter()
        .map(|&(a, ax, ay, x0, y0, th)| {
            let a = if a.abs() < 0.5 {
                a * (1.0 + 0.1 * rng.gauss())
            } else {
                a
            };
            let ax = ax * (1.0 + 0.05 * rng.gauss());
            let ay = ay * (1.0 + 0.05 * rng.gauss());
            let x0 = x0 + 0.02 * rng.gauss();
            let y0 = y0 + 0.02 * rng.gauss();
            let t = (th + 5.0 * rng.gauss()).to_radians();
            (a, ax, ay, x0, y0, t.cos(), t.sin())
        })
        .collect();
    let shade_angle = std::f64::consts::TAU * rng.uniform();
    let (sc, ss) = (0.05 * shade_angle.cos(), 0.05 * shade_angle.sin());
    Grid2R::from_fn(rows, cols, |r, c| {
        let (x, y) = (linspace(c, cols), linspace(r, rows));
        let v: f64 = shapes
            .iter()
            .filter(|&&(_, ax, ay, x0, y0, ct, st)| {
                let xr = (x - x0) * ct + (y - y0) * st;
                let yr = -(x - x0) * st + (y - y0) * ct;
                (xr / ax).powi(2) + (yr / ay).powi(2) <= 1.0
            })
            .map(|s| s.0)
            .sum();
        v * (1.0 + sc * x + ss * y)
    })
}

/// Smooth complex sensitivity of coil `c` out of `coils` at `(x, y)`.
///
/// Coils sit on a ring; the magnitude is a quadratic in the projection on the
/// coil direction and the phase is linear. One coil means unit sensitivity.
pub fn coil_sensitivity(c: usize, coils: usize, x: f64, y: f64) -> Complex64 {
    if coils == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let ang = std::f64::consts::TAU * c as f64 / coils as f64;
    let proj = x * ang.cos() + y * ang.sin();
    let amp = (1.0 + 0.5 * proj).powi(2) / 2.25;
    Complex64::from_polar(amp, 0.5 * x * ang.cos() + 0.5 * y)
}

/// Phantom times coil sensitivities, transformed to centered k-space.
pub fn phantom(rows: usize, cols: usize, coils: usize, seed: u64) -> Result<MultiCoilKSpace> {
    if coils == 0 {
        return param("coils must be >= 1");
    }
    let img = phantom_image(rows, cols, seed)?;
    let data = (0..coils)
        .into_par_iter()
        .map(|c| {
            let g = Grid2C::from_fn(rows, cols, |r, col| {
                let s = coil_sensitivity(c, coils, linspace(col, cols), linspace(r, rows));
                s * img.get(r, col)
            })?;
            dft2_centered(&g, false)
        })
        .collect::<Result<_>>()?;
    MultiCoilKSpace::new(data)
}
