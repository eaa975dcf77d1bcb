//! Executable checks of the masking mechanics.
//!
//! The discrete Wigner distribution here is the periodic pseudo-Wigner on odd
//! lengths, `W(x, k) = sum_xi I(x + xi) conj(I(x - xi)) exp(-4 pi j k xi / n)`
//! with indices taken mod `n`. Odd `n` makes `2 xi` a bijection mod `n`, so
//! `W(x, k)` is the unnormalized DFT of the lag product evaluated at bin
//! `2k mod n`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::masks::Mask;
use crate::numerics::{derive_seed, dft1, kahan_sum, ols_pearson, FitResult, Grid2C, Rng};
use crate::phase_space::{delta_s, husimi, spectral_entropy, HusimiParams, Weighting};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteWigner1D {
    pub n: usize,
    /// Row-major `W(x, k)`.
    pub values: Vec<f64>,
    /// Largest imaginary part discarded when taking the real part.
    pub max_imag: f64,
}

impl DiscreteWigner1D {
    pub fn get(&self, x: usize, k: usize) -> f64 {
        self.values[x * self.n + k]
    }
}

fn unnormalized_dft(x: &[Complex64]) -> Vec<Complex64> {
    let s = (x.len() as f64).sqrt();
    dft1(x, false).into_iter().map(|v| v * s).collect()
}

fn wigner_complex(signal: &[Complex64]) -> Result<(usize, Vec<Complex64>)> {
    let n = signal.len();
    if n < 3 || n % 2 == 0 {
        return param(format!("Wigner length must be odd and >= 3, got {n}"));
    }
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        let lag: Vec<Complex64> = (0..n)
            .map(|xi| signal[(x + xi) % n] * signal[(x + n - xi) % n].conj())
            .collect();
        let spec = unnormalized_dft(&lag);
        out.extend((0..n).map(|k| spec[(2 * k) % n]));
    }
    Ok((n, out))
}

/// Discrete periodic Wigner distribution of an odd-length signal.
pub fn wigner1d(signal: &[Complex64]) -> Result<DiscreteWigner1D> {
    let (n, w) = wigner_complex(signal)?;
    Ok(DiscreteWigner1D {
        n,
        max_imag: w.iter().map(|v| v.im.abs()).fold(0.0, f64::max),
        values: w.iter().map(|v| v.re).collect(),
    })
}

/// Largest gap between `W_{M I}` and `(1/n) sum_q W_M(x, q) W_I(x, k - q)`.
pub fn check_product_convolution(mask: &[Complex64], signal: &[Complex64]) -> Result<f64> {
    if mask.len() != signal.len() {
        return Err(Error::ShapeMismatch {
            left: (1, mask.len()),
            right: (1, signal.len()),
        });
    }
    let product: Vec<Complex64> = mask.iter().zip(signal).map(|(a, b)| a * b).collect();
    let (n, wj) = wigner_complex(&product)?;
    let (_, wm) = wigner_complex(mask)?;
    let (_, wi) = wigner_complex(signal)?;
    let mut worst = 0.0f64;
    for x in 0..n {
        for k in 0..n {
            let conv: Complex64 = (0..n)
                .map(|q| wm[x * n + q] * wi[x * n + (k + n - q) % n])
                .sum::<Complex64>()
                / n as f64;
            worst = worst.max((wj[x * n + k] - conv).norm());
        }
    }
    Ok(worst)
}

/// Largest gap in `DFT(I comb_q)(k) = (1/q) sum_m DFT(I)(k - m n/q)`.
///
/// `comb_q` keeps samples with `x mod q == 0`; both DFTs are unnormalized.
pub fn check_folding_identity(signal: &[Complex64], q: usize) -> Result<f64> {
    let n = signal.len();
    if q == 0 || n == 0 || n % q != 0 {
        return param(format!("period {q} must divide length {n}"));
    }
    let combed: Vec<Complex64> = signal
        .iter()
        .enumerate()
        .map(|(x, &v)| {
            if x % q == 0 {
                v
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let lhs = unnormalized_dft(&combed);
    let full = unnormalized_dft(signal);
    let step = n / q;
    Ok((0..n)
        .map(|k| {
            let folded: Complex64 = (0..q)
                .map(|m| full[(k + n * q - m * step) % n])
                .sum::<Complex64>()
                / q as f64;
            (lhs[k] - folded).norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    /// Entropy of the mixture.
    pub lhs: f64,
    /// Mixture of the entropies.
    pub rhs: f64,
    /// Whether at least two spectra with positive weight differ.
    pub strict: bool,
}

impl JensenCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs >= self.rhs - tol
    }
}

/// Compares `H(sum w_n r_n)` with `sum w_n H(r_n)` for probability vectors.
pub fn check_jensen_mixture(spectra: &[Vec<f64>], weights: &[f64]) -> Result<JensenCheck> {
    if spectra.is_empty() || spectra.len() != weights.len() {
        return param("need one weight per spectrum and at least one spectrum");
    }
    let len = spectra[0].len();
    for r in spectra {
        if r.len() != len || len == 0 {
            return param("spectra must share a nonzero length");
        }
        if r.iter().any(|&v| !(v >= 0.0 && v.is_finite()))
            || (kahan_sum(r.iter().copied()) - 1.0).abs() > 1e-9
        {
            return param("every spectrum must be a probability vector");
        }
    }
    if weights.iter().any(|&w| !(w >= 0.0))
        || (kahan_sum(weights.iter().copied()) - 1.0).abs() > 1e-9
    {
        return param("weights must be convex");
    }
    let mix: Vec<f64> = (0..len)
        .map(|k| kahan_sum(spectra.iter().zip(weights).map(|(r, w)| w * r[k])))
        .collect();
    let lhs = spectral_entropy(&mix);
    let rhs = kahan_sum(
        spectra
            .iter()
            .zip(weights)
            .map(|(r, w)| w * spectral_entropy(r)),
    );
    let active: Vec<&Vec<f64>> = spectra
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(r, _)| r)
        .collect();
    let strict = active.iter().any(|r| *r != active[0]);
    Ok(JensenCheck { lhs, rhs, strict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCurve {
    pub ns: Vec<usize>,
    pub grid_sides: Vec<usize>,
    pub l1_means: Vec<f64>,
    /// Standard deviation of the per-trial values at each `N`.
    pub l1_stds: Vec<f64>,
    pub fitted_slope: f64,
    pub fit: FitResult,
}

/// Side length whose window tiling has `round(sqrt(N))` windows per axis.
pub fn grid_side_for(n_cells: usize, p: &HusimiParams) -> usize {
    let per_axis = ((n_cells as f64).sqrt().round() as usize).max(1);
    (per_axis - 1) * p.hop + p.win
}

/// Relative L1 distance between the window-averaged spectra of a field and
/// its Bernoulli-masked copy, averaged over trials, as a function of `N`.
///
/// Masks keep each pixel with probability `keep_prob` and scale kept pixels
/// by `1 / sqrt(keep_prob)`. Trial `t` at the `i`-th `N` draws its field and
/// then its mask from `derive_seed(derive_seed(seed, i), t)`.
pub fn concentration_experiment<F>(
    field_gen: F,
    keep_prob: f64,
    p: &HusimiParams,
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConcentrationCurve>
where
    F: Fn(usize, usize, &mut Rng) -> Result<Grid2C> + Sync,
{
    if !(keep_prob > 0.0 && keep_prob < 1.0) {
        return param(format!("keep_prob must be in (0, 1), got {keep_prob}"));
    }
    if trials == 0 {
        return param("trials must be >= 1");
    }
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return param("ns must be positive and strictly increasing");
    }
    if (ns[ns.len() - 1] as f64) < 10.0 * ns[0] as f64 {
        return param("ns must span at least one decade");
    }
    p.validate()?;
    let scale = 1.0 / keep_prob.sqrt();
    let mut means = Vec::with_capacity(ns.len());
    let mut stds = Vec::with_capacity(ns.len());
    let mut sides = Vec::with_capacity(ns.len());
    for (i, &n_cells) in ns.iter().enumerate() {
        let side = grid_side_for(n_cells, p);
        let base = derive_seed(seed, i as u64);
        let vals: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = Rng::new(derive_seed(base, t as u64));
                let field = field_gen(side, side, &mut rng)?;
                if field.shape() != (side, side) {
                    return param(format!(
                        "field generator returned {:?}, expected {side}x{side}",
                        field.shape()
                    ));
                }
                let masked = Grid2C::from_vec(
                    side,
                    side,
                    field
                        .as_slice()
                        .iter()
                        .map(|&v| {
                            if rng.bernoulli(keep_prob) {
                                v * scale
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        })
                        .collect(),
                )?;
                let mi = husimi(&field, p)?.mean_spectrum();
                let mj = husimi(&masked, p)?.mean_spectrum();
                let den = kahan_sum(mi.iter().copied());
                if !(den > 0.0) {
                    return Err(Error::Degenerate(
                        "reference field has no band energy".into(),
                    ));
                }
                Ok(kahan_sum(mi.iter().zip(&mj).map(|(a, b)| (a - b).abs())) / den)
            })
            .collect::<Result<_>>()?;
        let m = kahan_sum(vals.iter().copied()) / trials as f64;
        let var = kahan_sum(vals.iter().map(|v| (v - m) * (v - m))) / trials as f64;
        means.push(m);
        stds.push(var.sqrt());
        sides.push(side);
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = means.iter().map(|&v| v.ln()).collect();
    let fit = ols_pearson(&lx, &ly)?;
    Ok(ConcentrationCurve {
        ns: ns.to_vec(),
        grid_sides: sides,
        l1_means: means,
        l1_stds: stds,
        fitted_slope: fit.slope,
        fit,
    })
}

/// Field of i.i.d. standard normal pixels.
pub fn white_field(rows: usize, cols: usize, rng: &mut Rng) -> Result<Grid2C> {
    Grid2C::from_fn(rows, cols, |_, _| Complex64::new(rng.gauss(), 0.0))
}

/// Pixel mask keeping sites with `r mod q == 0` and `c mod q == 0`.
pub fn lattice_mask(rows: usize, cols: usize, q: usize) -> Result<Mask> {
    if q == 0 {
        return param("lattice period must be >= 1");
    }
    Mask::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|i| (i / cols) % q == 0 && (i % cols) % q == 0)
            .collect(),
    )
}

/// Entropy changes of a lattice-supported field under its own lattice mask
/// and under a random pixel mask with the same budget.
///
/// The field is white noise on the lattice sites and zero elsewhere, so its
/// spectrum repeats on the reciprocal lattice and periodic masking leaves it
/// unchanged: the periodic change is exactly zero. Returns
/// `(delta_periodic, delta_random)`.
pub fn lattice_invariant_counterexample(
    side: usize,
    q: usize,
    p: &HusimiParams,
    seed: u64,
) -> Result<(f64, f64)> {
    let lattice = lattice_mask(side, side, q)?;
    let mut rng = Rng::new(seed);
    let field = Grid2C::from_fn(side, side, |r, c| {
        let v = rng.gauss();
        if lattice.get(r, c) {
            Complex64::new(v, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })?;
    let keep = rng.choose_k(side * side, lattice.keep_count())?;
    let mut kept = vec![false; side * side];
    keep.iter().for_each(|&i| kept[i] = true);
    let random = Mask::from_vec(side, side, kept)?;
    let run = |m: &Mask| -> Result<f64> {
        let acq = crate::masks::apply_mask(&field, m)?;
        Ok(delta_s(&field, &acq, p, Weighting::Energy)?.delta)
    };
    Ok((run(&lattice)?, run(&random)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::synth::{power_law_field, with_offset};
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wigner_direct(s: &[Complex64]) -> Vec<Complex64> {
        let n = s.len();
        let mut out = Vec::with_capacity(n * n);
        for x in 0..n {
            for k in 0..n {
                let mut acc = c(0.0, 0.0);
                for xi in 0..n {
                    let ph = -4.0 * std::f64::consts::PI * (k * xi) as f64 / n as f64;
                    acc += s[(x + xi) % n]
                        * s[(x + n - xi) % n].conj()
                        * Complex64::from_polar(1.0, ph);
                }
                out.push(acc);
            }
        }
        out
    }

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = Rng::new(seed);
        (0..n).map(|_| rng.complex_gauss(1.0)).collect()
    }

    #[test]
    fn wigner_of_delta_and_constant() {
        let mut d = vec![c(0.0, 0.0); 5];
        d[0] = c(1.0, 0.0);
        let w = wigner1d(&d).unwrap();
        for x in 0..5 {
            for k in 0..5 {
                assert!((w.get(x, k) - if x == 0 { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let w = wigner1d(&[c(1.0, 0.0); 7]).unwrap();
        for x in 0..7 {
            for k in 0..7 {
                assert!((w.get(x, k) - if k == 0 { 7.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(wigner1d(&[c(1.0, 0.0); 6]).is_err());
    }

    #[test]
    fn wigner_matches_direct_sum_and_marginals() {
        for n in [3usize, 9, 15, 31] {
            let s: Vec<Complex64> = (0..n)
                .map(|i| {
                    Complex64::from_polar(1.0 + 0.1 * i as f64, 0.3 * (i * i) as f64 / n as f64)
                })
                .collect();
            let w = wigner1d(&s).unwrap();
            let direct = wigner_direct(&s);
            assert!(w.max_imag < 1e-10);
            for (a, b) in w.values.iter().zip(&direct) {
                assert!((a - b.re).abs() < 1e-9 && b.im.abs() < 1e-9);
            }
            let spec: Vec<Complex64> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|x| {
                            s[x] * Complex64::from_polar(
                                1.0,
                                -std::f64::consts::TAU * (k * x) as f64 / n as f64,
                            )
                        })
                        .sum()
                })
                .collect();
            for (x, sx) in s.iter().enumerate() {
                let m: f64 = (0..n).map(|k| w.get(x, k)).sum::<f64>() / n as f64;
                assert!((m - sx.norm_sqr()).abs() < 1e-8);
            }
            for (k, sk) in spec.iter().enumerate() {
                let m: f64 = (0..n).map(|x| w.get(x, k)).sum::<f64>() / n as f64;
                let expected = sk.norm_sqr() / n as f64;
                assert!((m - expected).abs() < 1e-8 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn product_convolution_special_cases() {
        let s = random_signal(11, 1);
        assert!(check_product_convolution(&[c(1.0, 0.0); 11], &s).unwrap() < 1e-12 * 100.0);
        let mut d = vec![c(0.0, 0.0); 11];
        d[0] = c(1.0, 0.0);
        assert!(check_product_convolution(&random_signal(11, 2), &d).unwrap() < 1e-10);
        assert!(
            check_product_convolution(&random_signal(15, 3), &random_signal(15, 4)).unwrap() < 1e-8
        );
        assert!(check_product_convolution(&s, &random_signal(9, 5)).is_err());
    }

    #[test]
    fn folding_closed_forms() {
        let s = random_signal(64, 7);
        assert!(check_folding_identity(&s, 1).unwrap() < 1e-12);
        for q in [2, 4, 8, 64] {
            assert!(check_folding_identity(&s, q).unwrap() < 1e-10);
        }
        assert!(check_folding_identity(&s, 3).is_err());
        let tone: Vec<Complex64> = (0..8)
            .map(|x| Complex64::from_polar(1.0, std::f64::consts::TAU * 3.0 * x as f64 / 8.0))
            .collect();
        let combed: Vec<Complex64> = tone
            .iter()
            .enumerate()
            .map(|(x, &v)| if x % 2 == 0 { v } else { c(0.0, 0.0) })
            .collect();
        let spec = unnormalized_dft(&combed);
        let power: Vec<f64> = spec.iter().map(|v| v.norm_sqr()).collect();
        let total: f64 = power.iter().sum();
        for (k, p) in power.iter().enumerate() {
            let expected = if k == 3 || k == 7 { 0.5 } else { 0.0 };
            assert!((p / total - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn jensen_closed_forms() {
        let r = vec![0.2, 0.3, 0.5];
        let eq = check_jensen_mixture(&[r.clone(), r.clone()], &[0.4, 0.6]).unwrap();
        assert!((eq.lhs - eq.rhs).abs() < 1e-15 && !eq.strict);
        let two = check_jensen_mixture(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert!((two.lhs - 2f64.ln()).abs() < 1e-15 && two.rhs == 0.0 && two.strict);
        assert!(check_jensen_mixture(&[vec![0.5, 0.6]], &[1.0]).is_err());
        assert!(check_jensen_mixture(std::slice::from_ref(&r), &[0.9]).is_err());
    }

    #[test]
    fn concentration_validates_inputs() {
        let p = HusimiParams::new(8, 8.0 / 6.0, 8).unwrap();
        assert!(concentration_experiment(white_field, 1.0, &p, &[4, 64], 2, 0).is_err());
        assert!(concentration_experiment(white_field, 0.5, &p, &[4, 16], 2, 0).is_err());
        assert!(concentration_experiment(white_field, 0.5, &p, &[64, 4], 2, 0).is_err());
        assert_eq!(grid_side_for(64, &p), 64);
    }

    #[test]
    fn near_identity_mask_barely_moves_the_density() {
        let p = HusimiParams::new(8, 8.0 / 6.0, 8).unwrap();
        let curve = concentration_experiment(white_field, 0.999, &p, &[4, 16, 64], 4, 3).unwrap();
        assert!(
            curve.l1_means.iter().all(|&v| v < 0.05),
            "{:?}",
            curve.l1_means
        );
    }

    #[test]
    fn averaging_more_trials_shrinks_spread() {
        let p = HusimiParams::new(8, 8.0 / 6.0, 8).unwrap();
        let one: Vec<f64> = (0..8)
            .map(|s| {
                concentration_experiment(white_field, 0.5, &p, &[4, 64], 1, s)
                    .unwrap()
                    .l1_means[0]
            })
            .collect();
        let many: Vec<f64> = (0..8)
            .map(|s| {
                concentration_experiment(white_field, 0.5, &p, &[4, 64], 32, s)
                    .unwrap()
                    .l1_means[0]
            })
            .collect();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&many) < var(&one));
    }

    #[test]
    fn coloured_noise_plateaus() {
        let p = HusimiParams::new(8, 8.0 / 6.0, 8).unwrap();
        let gen = |r: usize, c: usize, rng: &mut Rng| {
            Ok(with_offset(&power_law_field(r, c, 2.0, rng)?, 0.0))
        };
        let curve = concentration_experiment(gen, 0.5, &p, &[16, 64, 256, 1024], 16, 5).unwrap();
        assert!(curve.fitted_slope > -0.2, "{:?}", curve);
        assert!(
            curve.l1_means.iter().all(|&v| v > 0.2),
            "{:?}",
            curve.l1_means
        );
    }

    #[test]
    fn lattice_supported_fields_are_invisible_to_their_lattice() {
        let p = HusimiParams::new(16, 16.0 / 6.0, 16).unwrap();
        let (per, rnd) = lattice_invariant_counterexample(64, 2, &p, 1).unwrap();
        assert_eq!(per, 0.0);
        assert!(rnd.abs() > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn product_convolution_is_exact(seed in any::<u64>(), half in 1usize..16) {
            let n = 2 * half + 1;
            let m = random_signal(n, seed);
            let s = random_signal(n, seed ^ 0xABCD);
            prop_assert!(check_product_convolution(&m, &s).unwrap() < 1e-8);
        }

        #[test]
        fn jensen_never_fails(seed in any::<u64>(), count in 1usize..6, len in 1usize..12) {
            let mut rng = Rng::new(seed);
            let spectra: Vec<Vec<f64>> = (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..len).map(|_| rng.uniform()).collect();
                    let s: f64 = v.iter().sum();
                    if s > 0.0 { v.iter().map(|x| x / s).collect() } else { vec![1.0 / len as f64; len] }
                })
                .collect();
            let w: Vec<f64> = (0..count).map(|_| rng.uniform() + 1e-3).collect();
            let tot: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / tot).collect();
            prop_assert!(check_jensen_mixture(&spectra, &w).unwrap().holds(1e-12));
        }
    }
}
