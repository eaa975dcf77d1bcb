//! Gaussian-windowed local spectra and band-entropy audits.
//!
//! A field is cut into `win x win` windows at stride `hop` (full windows
//! only, starting at the origin). Each window is multiplied by a unit-energy
//! Gaussian and transformed with the orthonormal DFT; the squared magnitudes
//! over the chosen frequency band form the local spectrum. Normalizing each
//! spectrum by its energy gives a probability vector whose Shannon entropy
//! (nats) is the local band entropy; averaging over windows gives the global
//! value, and the difference between an acquired field and its reference is
//! the audit scalar `delta`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::{gaussian_window, kahan_sum, Fft2, Grid2C, NeumaierSum};

/// Energy floor below which windows are excluded from entropy averages.
pub const DEFAULT_ENERGY_FLOOR: f64 = 1e-6;

/// Frequency bins over which spectra are normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// All `win x win` bins.
    Full,
    /// Explicit `(row, col)` DFT bins, zero frequency at `(0, 0)`.
    Bins(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiParams {
    pub win: usize,
    pub sigma: f64,
    pub hop: usize,
    pub band: Band,
}

impl HusimiParams {
    /// Full-band parameters.
    pub fn new(win: usize, sigma: f64, hop: usize) -> Result<Self> {
        let p = Self {
            win,
            sigma,
            hop,
            band: Band::Full,
        };
        p.validate()?;
        Ok(p)
    }

    /// Window 32, sigma 16, hop 10.
    pub fn mri() -> Self {
        Self::new(32, 16.0, 10).expect("valid preset")
    }

    /// Window 4, sigma 1, hop 1.
    pub fn mimo() -> Self {
        Self::new(4, 1.0, 1).expect("valid preset")
    }

    pub fn with_band(mut self, bins: Vec<(usize, usize)>) -> Result<Self> {
        self.band = Band::Bins(bins);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.win == 0 {
            return param("win must be >= 1");
        }
        if self.hop == 0 || self.hop > self.win {
            return param(format!("hop must be in 1..={}, got {}", self.win, self.hop));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return param(format!("sigma must be positive, got {}", self.sigma));
        }
        if let Band::Bins(bins) = &self.band {
            if bins.is_empty() {
                return param("band must be nonempty");
            }
            if bins.iter().any(|&(r, c)| r >= self.win || c >= self.win) {
                return param("band bins must lie in 0..win on both axes");
            }
            let mut seen = bins.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != bins.len() {
                return param("band bins must be distinct");
            }
        }
        Ok(())
    }

    pub fn band_len(&self) -> usize {
        match &self.band {
            Band::Full => self.win * self.win,
            Band::Bins(b) => b.len(),
        }
    }

    /// Row-major flat indices of the band inside a `win x win` spectrum.
    fn band_indices(&self) -> Vec<usize> {
        match &self.band {
            Band::Full => (0..self.win * self.win).collect(),
            Band::Bins(b) => b.iter().map(|&(r, c)| r * self.win + c).collect(),
        }
    }
}

/// How local entropies are averaged into the global value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Energy,
}

impl std::str::FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "energy" => Ok(Self::Energy),
            _ => param(format!("unknown weighting '{s}' (uniform|energy)")),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Energy => "energy",
        })
    }
}

/// Per-window spectra over the band.
///
/// `energies` always hold the raw band energies. After [`band_normalize`]
/// the spectra of included windows sum to one and `excluded` marks windows
/// at or below the floor (their spectra are left as computed).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceDensity {
    pub params: HusimiParams,
    /// Top-left corner of each window, row-major tiling order.
    pub origins: Vec<(usize, usize)>,
    band_len: usize,
    spectra: Vec<f64>,
    energies: Vec<f64>,
    excluded: Vec<bool>,
    normalized: bool,
}

impl PhaseSpaceDensity {
    pub fn n_windows(&self) -> usize {
        self.origins.len()
    }

    pub fn band_len(&self) -> usize {
        self.band_len
    }

    pub fn spectrum(&self, i: usize) -> &[f64] {
        &self.spectra[i * self.band_len..(i + 1) * self.band_len]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Centre of window `i` in pixel coordinates.
    pub fn center(&self, i: usize) -> (f64, f64) {
        let c = (self.params.win as f64 - 1.0) / 2.0;
        let (r, q) = self.origins[i];
        (r as f64 + c, q as f64 + c)
    }

    /// Bin-wise average of the spectra over all windows.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let n = self.n_windows() as f64;
        (0..self.band_len)
            .map(|k| {
                kahan_sum((0..self.n_windows()).map(|i| self.spectra[i * self.band_len + k])) / n
            })
            .collect()
    }
}

/// Window origins along one axis of length `n`.
fn axis_origins(n: usize, win: usize, hop: usize) -> Vec<usize> {
    (0..=(n - win) / hop).map(|i| i * hop).collect()
}

/// Local power spectra of `field` on the window tiling defined by `p`.
pub fn husimi(field: &Grid2C, p: &HusimiParams) -> Result<PhaseSpaceDensity> {
    p.validate()?;
    let (rows, cols) = field.shape();
    if p.win > rows.min(cols) {
        return param(format!(
            "window {} does not fit a {rows}x{cols} grid",
            p.win
        ));
    }
    let w = gaussian_window(p.win, p.sigma)?;
    let w2d = w.to_2d();
    let plan = Fft2::new(p.win, p.win)?;
    let band = p.band_indices();
    let scale = 1.0 / (p.win * p.win) as f64;

    let mut origins = Vec::new();
    for &r in &axis_origins(rows, p.win, p.hop) {
        for &c in &axis_origins(cols, p.win, p.hop) {
            origins.push((r, c));
        }
    }

    let data = field.as_slice();
    let win = p.win;
    let per_window: Vec<(Vec<f64>, f64)> = origins
        .par_iter()
        .map_init(
            || (vec![Complex64::new(0.0, 0.0); win * win], Vec::new()),
            |(buf, scratch), &(r0, c0)| {
                for i in 0..win {
                    let row = &data[(r0 + i) * cols + c0..(r0 + i) * cols + c0 + win];
                    for j in 0..win {
                        buf[i * win + j] = row[j] * w2d[i * win + j];
                    }
                }
                plan.process(buf, false, scratch);
                let spec: Vec<f64> = band.iter().map(|&k| buf[k].norm_sqr() * scale).collect();
                let e = kahan_sum(spec.iter().copied());
                (spec, e)
            },
        )
        .collect();

    let band_len = band.len();
    let mut spectra = Vec::with_capacity(origins.len() * band_len);
    let mut energies = Vec::with_capacity(origins.len());
    for (s, e) in per_window {
        spectra.extend_from_slice(&s);
        energies.push(e);
    }
    Ok(PhaseSpaceDensity {
        params: p.clone(),
        excluded: vec![false; origins.len()],
        origins,
        band_len,
        spectra,
        energies,
        normalized: false,
    })
}

/// Divides every spectrum with energy above `energy_floor` by its energy and
/// flags the rest as excluded.
pub fn band_normalize(d: &PhaseSpaceDensity, energy_floor: f64) -> Result<PhaseSpaceDensity> {
    if !(energy_floor >= 0.0) {
        return param(format!("energy floor must be >= 0, got {energy_floor}"));
    }
    let mut out = d.clone();
    for i in 0..d.n_windows() {
        let e = d.energies[i];
        if e > energy_floor {
            out.excluded[i] = false;
            for v in &mut out.spectra[i * d.band_len..(i + 1) * d.band_len] {
                *v /= e;
            }
        } else {
            out.excluded[i] = true;
        }
    }
    out.normalized = true;
    Ok(out)
}

/// Shannon entropy in nats of a probability vector, `0 ln 0 = 0`.
pub fn spectral_entropy(p: &[f64]) -> f64 {
    kahan_sum(p.iter().map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    /// Local entropy per window; `None` for excluded windows.
    pub local: Vec<Option<f64>>,
    pub global: f64,
    pub weighting: Weighting,
    pub params: HusimiParams,
}

/// Local and global band entropies of a band-normalized density.
///
/// Local values are clamped to `[0, ln |band|]` to absorb rounding.
pub fn band_entropy(d: &PhaseSpaceDensity, weighting: Weighting) -> Result<EntropyResult> {
    if !d.normalized {
        return param("band_entropy expects a band-normalized density");
    }
    let cap = (d.band_len as f64).ln();
    let local: Vec<Option<f64>> = (0..d.n_windows())
        .map(|i| (!d.excluded[i]).then(|| spectral_entropy(d.spectrum(i)).clamp(0.0, cap)))
        .collect();
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    for (s, &e) in local.iter().zip(&d.energies) {
        if let Some(s) = s {
            match weighting {
                Weighting::Uniform => {
                    num.add(*s);
                    den.add(1.0);
                }
                Weighting::Energy => {
                    num.add(s * e);
                    den.add(e);
                }
            }
        }
    }
    if !(den.value() > 0.0) {
        return Err(Error::EmptyAudit);
    }
    Ok(EntropyResult {
        local,
        global: num.value() / den.value(),
        weighting,
        params: d.params.clone(),
    })
}

/// Husimi density, normalization and entropy in one call.
pub fn field_entropy(
    field: &Grid2C,
    p: &HusimiParams,
    weighting: Weighting,
    energy_floor: f64,
) -> Result<EntropyResult> {
    band_entropy(
        &band_normalize(&husimi(field, p)?, energy_floor)?,
        weighting,
    )
}

/// Per-scale entries of a multi-scale report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    pub win: usize,
    pub sigma: f64,
    pub hop: usize,
    pub s_ref: Option<f64>,
    pub s_acq: Option<f64>,
    /// Whether this scale entered the scale means.
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSReport {
    pub s_ref: f64,
    pub s_acq: f64,
    pub delta: f64,
    pub abs_delta: f64,
    pub scales: Option<Vec<ScaleEntry>>,
}

impl DeltaSReport {
    fn from_pair(s_ref: f64, s_acq: f64, scales: Option<Vec<ScaleEntry>>) -> Self {
        let delta = s_acq - s_ref;
        Self {
            s_ref,
            s_acq,
            delta,
            abs_delta: delta.abs(),
            scales,
        }
    }
}

/// `S(acquired) - S(reference)` with identical parameters and the default floor.
pub fn delta_s(
    reference: &Grid2C,
    acquired: &Grid2C,
    p: &HusimiParams,
    weighting: Weighting,
) -> Result<DeltaSReport> {
    delta_s_with_floor(reference, acquired, p, weighting, DEFAULT_ENERGY_FLOOR)
}

pub fn delta_s_with_floor(
    reference: &Grid2C,
    acquired: &Grid2C,
    p: &HusimiParams,
    weighting: Weighting,
    energy_floor: f64,
) -> Result<DeltaSReport> {
    reference.ensure_same_shape(acquired)?;
    let s_ref = field_entropy(reference, p, weighting, energy_floor)?.global;
    let s_acq = field_entropy(acquired, p, weighting, energy_floor)?.global;
    Ok(DeltaSReport::from_pair(s_ref, s_acq, None))
}

/// One rung of a multi-scale ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub win: usize,
    pub sigma: f64,
}

/// Stride used at each scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopRule {
    /// `hop = win`.
    NonOverlapping,
    /// `hop = round(win * f)`, clamped to `1..=win`.
    Fraction(f64),
    /// The same stride at every scale, clamped to `1..=win`.
    Fixed(usize),
}

impl HopRule {
    pub fn hop_for(&self, win: usize) -> usize {
        let h = match *self {
            HopRule::NonOverlapping => win,
            HopRule::Fraction(f) => (win as f64 * f).round() as usize,
            HopRule::Fixed(h) => h,
        };
        h.clamp(1, win.max(1))
    }
}

/// Window sizes 32, 48, 64, 96, 128, 192 and 256 that fit the grid, each with sigma = W/6.
pub fn default_scale_ladder(rows: usize, cols: usize) -> Vec<Scale> {
    [32usize, 48, 64, 96, 128, 192, 256]
        .into_iter()
        .filter(|&w| w <= rows.min(cols))
        .map(|w| Scale {
            win: w,
            sigma: w as f64 / 6.0,
        })
        .collect()
}

/// Energy-weighted entropies averaged over a ladder of scales.
///
/// A scale enters the means only if both fields keep at least one window
/// above the default floor there; if no scale survives the call fails with
/// [`Error::EmptyAudit`].
pub fn multiscale_delta_s(
    reference: &Grid2C,
    acquired: &Grid2C,
    scales: &[Scale],
    hop_rule: HopRule,
) -> Result<DeltaSReport> {
    reference.ensure_same_shape(acquired)?;
    if scales.is_empty() {
        return param("empty scale list");
    }
    let (rows, cols) = reference.shape();
    let mut entries = Vec::with_capacity(scales.len());
    for s in scales {
        if s.win == 0 || s.win > rows.min(cols) {
            return param(format!("scale {} does not fit a {rows}x{cols} grid", s.win));
        }
        let p = HusimiParams::new(s.win, s.sigma, hop_rule.hop_for(s.win))?;
        let opt = |g: &Grid2C| match field_entropy(g, &p, Weighting::Energy, DEFAULT_ENERGY_FLOOR) {
            Ok(r) => Ok(Some(r.global)),
            Err(Error::EmptyAudit) => Ok(None),
            Err(e) => Err(e),
        };
        let s_ref = opt(reference)?;
        let s_acq = opt(acquired)?;
        entries.push(ScaleEntry {
            win: p.win,
            sigma: p.sigma,
            hop: p.hop,
            s_ref,
            s_acq,
            used: s_ref.is_some() && s_acq.is_some(),
        });
    }
    let used: Vec<&ScaleEntry> = entries.iter().filter(|e| e.used).collect();
    if used.is_empty() {
        return Err(Error::EmptyAudit);
    }
    let n = used.len() as f64;
    let s_ref = kahan_sum(used.iter().map(|e| e.s_ref.unwrap_or(0.0))) / n;
    let s_acq = kahan_sum(used.iter().map(|e| e.s_acq.unwrap_or(0.0))) / n;
    Ok(DeltaSReport::from_pair(s_ref, s_acq, Some(entries)))
}

/// Which direction of a metric counts as better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

/// Per-sample advantage of `b` over `a`: `a - b` when lower is better,
/// `b - a` when higher is better.
pub fn comparative_advantage(a: &[f64], b: &[f64], orientation: Orientation) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return param(format!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| match orientation {
            Orientation::LowerBetter => x - y,
            Orientation::HigherBetter => y - x,
        })
        .collect())
}

/// Rescales to `[0, 1]` using the pooled min and max; a constant list maps to zeros.
pub fn min_max_normalize(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    xs.iter()
        .map(|&x| if span > 0.0 { (x - lo) / span } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn noise(rows: usize, cols: usize, seed: u64) -> Grid2C {
        let mut rng = Rng::new(seed);
        Grid2C::from_fn(rows, cols, |_, _| Complex64::new(rng.gauss(), rng.gauss())).unwrap()
    }

    fn density(spectra: Vec<Vec<f64>>) -> PhaseSpaceDensity {
        let band_len = spectra[0].len();
        let energies = spectra.iter().map(|s| s.iter().sum()).collect();
        PhaseSpaceDensity {
            params: HusimiParams::new(1, 1.0, 1).unwrap(),
            origins: (0..spectra.len()).map(|i| (i, 0)).collect(),
            band_len,
            excluded: vec![false; spectra.len()],
            spectra: spectra.concat(),
            energies,
            normalized: false,
        }
    }

    #[test]
    fn constant_field_is_dc_point_mass() {
        let g = Grid2C::filled(12, 12, Complex64::new(3.0, -1.0)).unwrap();
        let d = husimi(&g, &HusimiParams::new(4, 1.0, 2).unwrap()).unwrap();
        assert_eq!(d.n_windows(), 25);
        for i in 0..d.n_windows() {
            let s = d.spectrum(i);
            assert!(s[0] > 0.0);
            // The window is not flat, so other bins carry its own leakage;
            // with a near-flat window the DC bin takes everything.
            assert!(s[0] >= s[1..].iter().copied().fold(0.0, f64::max));
        }
        let flat = husimi(&g, &HusimiParams::new(4, 1e6, 2).unwrap()).unwrap();
        for i in 0..flat.n_windows() {
            let s = flat.spectrum(i);
            assert!(s[1..].iter().all(|&v| v < 1e-20 * s[0]));
        }
    }

    #[test]
    fn zeros_have_zero_energy_and_are_excluded() {
        let g = Grid2C::zeros(8, 8).unwrap();
        let d = husimi(&g, &HusimiParams::new(4, 1.0, 4).unwrap()).unwrap();
        assert!(d.energies().iter().all(|&e| e == 0.0));
        let n = band_normalize(&d, 0.0).unwrap();
        assert!(n.excluded().iter().all(|&x| x));
        assert!(matches!(
            band_entropy(&n, Weighting::Uniform),
            Err(Error::EmptyAudit)
        ));
    }

    #[test]
    fn window_count_and_origins() {
        let g = noise(16, 16, 1);
        let d = husimi(&g, &HusimiParams::new(8, 8.0 / 6.0, 8).unwrap()).unwrap();
        assert_eq!(d.origins, vec![(0, 0), (0, 8), (8, 0), (8, 8)]);
        let d = husimi(&noise(20, 13, 1), &HusimiParams::new(8, 2.0, 3).unwrap()).unwrap();
        // rows: 0,3,6,9,12 ; cols: 0,3
        assert_eq!(d.n_windows(), 10);
        assert_eq!(d.center(0), (3.5, 3.5));
    }

    #[test]
    fn window_too_large() {
        assert!(husimi(&noise(8, 16, 1), &HusimiParams::new(9, 2.0, 1).unwrap()).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(HusimiParams::new(4, 1.0, 0).is_err());
        assert!(HusimiParams::new(4, 1.0, 5).is_err());
        assert!(HusimiParams::new(4, 0.0, 1).is_err());
        let p = HusimiParams::new(4, 1.0, 1).unwrap();
        assert!(p.clone().with_band(vec![]).is_err());
        assert!(p.clone().with_band(vec![(4, 0)]).is_err());
        assert!(p.clone().with_band(vec![(1, 1), (1, 1)]).is_err());
        assert_eq!(p.with_band(vec![(0, 0), (1, 2)]).unwrap().band_len(), 2);
    }

    #[test]
    fn normalize_two_two() {
        let d = density(vec![vec![2.0, 2.0]]);
        let n = band_normalize(&d, 1e-6).unwrap();
        assert_eq!(n.spectrum(0), &[0.5, 0.5]);
        assert!(band_normalize(&d, -1.0).is_err());
    }

    #[test]
    fn entropy_arithmetic() {
        let d = density(vec![vec![1.0, 0.0], vec![1.5, 1.5]]);
        let n = band_normalize(&d, 1e-6).unwrap();
        let u = band_entropy(&n, Weighting::Uniform).unwrap();
        assert!((u.global - LN_2 / 2.0).abs() < 1e-15);
        let e = band_entropy(&n, Weighting::Energy).unwrap();
        assert!((e.global - 0.75 * LN_2).abs() < 1e-15);
        assert_eq!(u.local[0], Some(0.0));
    }

    #[test]
    fn uniform_spectra_reach_log_band() {
        let d = density(vec![vec![1.0; 64]; 3]);
        let r = band_entropy(&band_normalize(&d, 0.0).unwrap(), Weighting::Uniform).unwrap();
        assert!((r.global - 64f64.ln()).abs() < 1e-12);
        assert!((r.global - 4.1589).abs() < 1e-4);
    }

    #[test]
    fn entropy_requires_normalized_input() {
        let d = density(vec![vec![1.0, 1.0]]);
        assert!(band_entropy(&d, Weighting::Uniform).is_err());
    }

    #[test]
    fn identical_fields_have_zero_delta() {
        let g = noise(24, 24, 5);
        let p = HusimiParams::new(8, 2.0, 4).unwrap();
        let r = delta_s(&g, &g, &p, Weighting::Energy).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.abs_delta, 0.0);
        assert!(delta_s(&g, &noise(24, 23, 5), &p, Weighting::Energy).is_err());
    }

    #[test]
    fn single_scale_equals_energy_delta() {
        let a = noise(40, 40, 2);
        let b = Grid2C::from_fn(40, 40, |r, c| {
            if (r / 4 + c / 4) % 2 == 0 {
                a.get(r, c)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let one = multiscale_delta_s(
            &a,
            &b,
            &[Scale {
                win: 16,
                sigma: 16.0 / 6.0,
            }],
            HopRule::NonOverlapping,
        )
        .unwrap();
        let direct = delta_s(
            &a,
            &b,
            &HusimiParams::new(16, 16.0 / 6.0, 16).unwrap(),
            Weighting::Energy,
        )
        .unwrap();
        assert_eq!(one.delta, direct.delta);
        let same = multiscale_delta_s(
            &a,
            &a,
            &default_scale_ladder(40, 40),
            HopRule::NonOverlapping,
        )
        .unwrap();
        assert_eq!(same.delta, 0.0);
        assert!(multiscale_delta_s(&a, &b, &[], HopRule::NonOverlapping).is_err());
    }

    #[test]
    fn scales_with_no_energy_are_skipped() {
        let a = noise(64, 64, 3);
        // Keep only the first 8 columns: the 64-wide scale still sees energy,
        // but at win 32 the right half is empty, never the whole field.
        let b = Grid2C::from_fn(64, 64, |r, c| {
            if c < 8 {
                a.get(r, c)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let r = multiscale_delta_s(
            &a,
            &b,
            &default_scale_ladder(64, 64),
            HopRule::NonOverlapping,
        )
        .unwrap();
        assert!(r.scales.as_ref().unwrap().iter().all(|e| e.used));
        let z = Grid2C::zeros(64, 64).unwrap();
        assert!(matches!(
            multiscale_delta_s(
                &a,
                &z,
                &default_scale_ladder(64, 64),
                HopRule::NonOverlapping
            ),
            Err(Error::EmptyAudit)
        ));
    }

    #[test]
    fn ladder_and_hops() {
        let l = default_scale_ladder(100, 256);
        assert_eq!(
            l.iter().map(|s| s.win).collect::<Vec<_>>(),
            vec![32, 48, 64, 96]
        );
        assert_eq!(l[0].sigma, 32.0 / 6.0);
        assert!(default_scale_ladder(16, 16).is_empty());
        assert_eq!(HopRule::Fraction(0.3125).hop_for(24), 8);
        assert_eq!(HopRule::Fraction(0.3125).hop_for(32), 10);
        assert_eq!(HopRule::Fraction(0.3125).hop_for(48), 15);
        assert_eq!(HopRule::Fixed(40).hop_for(16), 16);
    }

    #[test]
    fn advantage_orientation() {
        assert_eq!(
            comparative_advantage(&[2.0], &[1.0], Orientation::LowerBetter).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            comparative_advantage(&[2.0], &[1.0], Orientation::HigherBetter).unwrap(),
            vec![-1.0]
        );
        assert_eq!(
            comparative_advantage(&[3.0, 4.0], &[3.0, 4.0], Orientation::LowerBetter).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(comparative_advantage(&[1.0], &[], Orientation::LowerBetter).is_err());
        assert_eq!(min_max_normalize(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[2.0, 2.0]), vec![0.0, 0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn entropy_bounds(seed in any::<u64>(), win in 2usize..9, hop_frac in 0.1f64..=1.0) {
            let hop = ((win as f64 * hop_frac).ceil() as usize).clamp(1, win);
            let p = HusimiParams::new(win, win as f64 / 4.0, hop).unwrap();
            let g = noise(20, 20, seed);
            let r = field_entropy(&g, &p, Weighting::Uniform, 0.0).unwrap();
            let cap = ((win * win) as f64).ln();
            for s in r.local.iter().flatten() {
                prop_assert!(*s >= 0.0 && *s <= cap);
            }
        }

        #[test]
        fn energies_are_row_sums(seed in any::<u64>()) {
            let d = husimi(&noise(18, 18, seed), &HusimiParams::new(6, 1.5, 3).unwrap()).unwrap();
            for i in 0..d.n_windows() {
                let s: f64 = d.spectrum(i).iter().sum();
                prop_assert!((s - d.energies()[i]).abs() <= 1e-12 * s.max(1e-300));
                prop_assert!(d.spectrum(i).iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn scale_invariance(seed in any::<u64>(), mag in 0.1f64..10.0, phase in 0.0f64..std::f64::consts::TAU) {
            let g = noise(24, 24, seed);
            let mask = Grid2C::from_fn(24, 24, |r, c| {
                if (r * 7 + c * 3) % 5 == 0 { Complex64::new(0.0, 0.0) } else { g.get(r, c) }
            }).unwrap();
            let c = Complex64::from_polar(mag, phase);
            let p = HusimiParams::new(8, 2.0, 4).unwrap();
            for w in [Weighting::Uniform, Weighting::Energy] {
                let a = delta_s(&g, &mask, &p, w).unwrap();
                let b = delta_s(&g.scale(c).unwrap(), &mask.scale(c).unwrap(), &p, w).unwrap();
                prop_assert!((a.delta - b.delta).abs() < 1e-10);
                prop_assert!((a.s_ref - b.s_ref).abs() < 1e-10);
            }
        }

        #[test]
        fn shift_by_hop_keeps_uniform_entropy(seed in any::<u64>(), sr in 0usize..4, sc in 0usize..4) {
            let hop = 6;
            let g = noise(24, 24, seed);
            let shifted = Grid2C::from_fn(24, 24, |r, c| g.get((r + 24 - sr * hop) % 24, (c + 24 - sc * hop) % 24)).unwrap();
            let p = HusimiParams::new(6, 1.5, hop).unwrap();
            let a = field_entropy(&g, &p, Weighting::Uniform, 0.0).unwrap().global;
            let b = field_entropy(&shifted, &p, Weighting::Uniform, 0.0).unwrap().global;
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn jensen_on_random_mixtures(seed in any::<u64>(), parts in 2usize..6, len in 2usize..40) {
            let mut rng = Rng::new(seed);
            let mut comps = Vec::new();
            for _ in 0..parts {
                let raw: Vec<f64> = (0..len).map(|_| rng.uniform().powi(3)).collect();
                let s: f64 = raw.iter().sum();
                comps.push(raw.into_iter().map(|v| v / s).collect::<Vec<_>>());
            }
            let w_raw: Vec<f64> = (0..parts).map(|_| rng.uniform() + 1e-3).collect();
            let ws: f64 = w_raw.iter().sum();
            let w: Vec<f64> = w_raw.iter().map(|v| v / ws).collect();
            let mix: Vec<f64> = (0..len).map(|k| comps.iter().zip(&w).map(|(c, wn)| wn * c[k]).sum()).collect();
            let lhs = spectral_entropy(&mix);
            let rhs: f64 = comps.iter().zip(&w).map(|(c, wn)| wn * spectral_entropy(c)).sum();
            prop_assert!(lhs >= rhs - 1e-12);
        }
    }
}
