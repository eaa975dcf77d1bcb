//! Sampling geometries: image patch masks, MRI phase-encoding line masks and
//! antenna deactivation patterns, plus pointwise application to a field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::{kahan_sum, Grid2C, Rng};

/// Realized binary mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    kept: Vec<bool>,
    keep_count: usize,
}

impl Mask {
    pub fn from_vec(rows: usize, cols: usize, kept: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(kept.len()) {
            return param(format!(
                "mask data of length {} does not match {rows}x{cols}",
                kept.len()
            ));
        }
        let keep_count = kept.iter().filter(|&&k| k).count();
        Ok(Self {
            rows,
            cols,
            kept,
            keep_count,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, vec![true; rows * cols])
    }

    pub fn empty(rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, vec![false; rows * cols])
    }

    /// Broadcasts a per-column line pattern down `rows` rows.
    pub fn from_columns(rows: usize, lines: &[bool]) -> Result<Self> {
        let cols = lines.len();
        let mut kept = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            kept.extend_from_slice(lines);
        }
        Self::from_vec(rows, cols, kept)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn keep_count(&self) -> usize {
        self.keep_count
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.kept[r * self.cols + c]
    }

    /// Columns in which every entry is kept.
    pub fn kept_columns(&self) -> Vec<bool> {
        (0..self.cols)
            .map(|c| (0..self.rows).all(|r| self.get(r, c)))
            .collect()
    }

    /// Whether every kept entry of `self` is also kept in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.shape() == other.shape() && self.kept.iter().zip(&other.kept).all(|(&a, &b)| !a || b)
    }
}

/// `J = M * I`, zero where the mask drops an entry.
pub fn apply_mask(field: &Grid2C, m: &Mask) -> Result<Grid2C> {
    if field.shape() != m.shape() {
        return Err(Error::ShapeMismatch {
            left: field.shape(),
            right: m.shape(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    Grid2C::from_vec(
        field.rows(),
        field.cols(),
        field
            .as_slice()
            .iter()
            .zip(&m.kept)
            .map(|(&v, &k)| if k { v } else { zero })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Periodic,
    Random,
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "random" => Ok(Self::Random),
            _ => param(format!("unknown geometry '{s}' (periodic|random)")),
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Periodic => "periodic",
            Self::Random => "random",
        })
    }
}

/// Image mask on a grid of square patches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchMaskSpec {
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub patch_px: usize,
    pub geometry: Geometry,
    pub interval_k: usize,
    /// Random geometry only; defaults to `ceil(patch_rows * patch_cols / k^2)`.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl PatchMaskSpec {
    pub fn pixel_shape(&self) -> (usize, usize) {
        (
            self.patch_rows * self.patch_px,
            self.patch_cols * self.patch_px,
        )
    }

    /// Number of patches the random geometry keeps.
    pub fn random_budget(&self) -> usize {
        let k2 = self.interval_k * self.interval_k;
        self.budget
            .unwrap_or_else(|| (self.patch_rows * self.patch_cols).div_ceil(k2.max(1)))
    }
}

/// Patch-level keep pattern, row-major over the patch grid.
pub fn patch_keep(spec: &PatchMaskSpec) -> Result<Vec<bool>> {
    if spec.interval_k == 0 {
        return param("interval_k must be >= 1");
    }
    if spec.patch_rows == 0 || spec.patch_cols == 0 || spec.patch_px == 0 {
        return param("patch grid and patch size must be >= 1");
    }
    let (pr, pc) = (spec.patch_rows, spec.patch_cols);
    let count = pr * pc;
    let k = spec.interval_k;
    match spec.geometry {
        Geometry::Periodic => Ok((0..count)
            .map(|i| (i / pc) % k == 0 && (i % pc) % k == 0)
            .collect()),
        Geometry::Random => {
            let budget = spec.random_budget();
            if budget > count {
                return param(format!("budget {budget} exceeds {count} patches"));
            }
            let mut keep = vec![false; count];
            for i in Rng::new(spec.seed).choose_k(count, budget)? {
                keep[i] = true;
            }
            Ok(keep)
        }
    }
}

/// Pixel mask in which each kept patch is fully true.
pub fn patch_mask(spec: &PatchMaskSpec) -> Result<Mask> {
    let keep = patch_keep(spec)?;
    let (rows, cols) = spec.pixel_shape();
    let px = spec.patch_px;
    let kept = (0..rows * cols)
        .map(|i| keep[(i / cols / px) * spec.patch_cols + (i % cols) / px])
        .collect();
    Mask::from_vec(rows, cols, kept)
}

/// Line-selection rule outside the ACS block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KSpaceFamily {
    Periodic,
    Random,
    PoissonGap,
    Parametric { alpha: f64, beta: f64 },
}

impl KSpaceFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::Random => "random",
            Self::PoissonGap => "poisson_gap",
            Self::Parametric { .. } => "parametric",
        }
    }

    /// Short label that includes parametric coefficients.
    pub fn label(&self) -> String {
        match self {
            Self::Parametric { alpha, beta } => format!("parametric(a={alpha},b={beta})"),
            other => other.name().to_string(),
        }
    }

    /// Parses `periodic`, `random` or `poisson_gap`; parametric needs coefficients.
    pub fn parse(name: &str, alpha: f64, beta: f64) -> Result<Self> {
        match name {
            "periodic" => Ok(Self::Periodic),
            "random" => Ok(Self::Random),
            "poisson_gap" => Ok(Self::PoissonGap),
            "parametric" => Ok(Self::Parametric { alpha, beta }),
            _ => param(format!("unknown k-space family '{name}'")),
        }
    }
}

/// Phase-encoding line mask with a fully sampled central block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSpaceMaskSpec {
    pub n_lines: usize,
    /// Rows of the 2D broadcast (readout extent).
    pub readout: usize,
    pub acs: usize,
    pub accel: f64,
    #[serde(flatten)]
    pub family: KSpaceFamily,
    pub seed: u64,
}

impl KSpaceMaskSpec {
    /// First ACS index: `n/2 - acs/2`.
    pub fn acs_start(&self) -> usize {
        self.n_lines / 2 - self.acs / 2
    }

    /// Lines sampled outside the ACS: `round(n / accel) - acs`.
    pub fn outer_budget(&self) -> Result<usize> {
        self.validate()?;
        let total = (self.n_lines as f64 / self.accel).round() as i64;
        let b = total - self.acs as i64;
        if b < 0 {
            return Err(Error::Infeasible(format!(
                "accel {} leaves {total} lines, fewer than the {} ACS lines",
                self.accel, self.acs
            )));
        }
        Ok(b as usize)
    }

    fn validate(&self) -> Result<()> {
        if self.n_lines == 0 || self.readout == 0 {
            return param("n_lines and readout must be >= 1");
        }
        if self.acs > self.n_lines {
            return param(format!("acs {} exceeds {} lines", self.acs, self.n_lines));
        }
        if !(self.accel >= 1.0) || !self.accel.is_finite() {
            return param(format!("accel must be >= 1, got {}", self.accel));
        }
        if let KSpaceFamily::Parametric { alpha, beta } = self.family {
            if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
                return param("alpha and beta must be finite and >= 0");
            }
        }
        Ok(())
    }
}

/// Sampled phase-encoding lines (length `n_lines`).
pub fn kspace_lines(spec: &KSpaceMaskSpec) -> Result<Vec<bool>> {
    let budget = spec.outer_budget()?;
    let n = spec.n_lines;
    let start = spec.acs_start();
    let mut lines = vec![false; n];
    lines[start..start + spec.acs]
        .iter_mut()
        .for_each(|v| *v = true);
    let outer: Vec<usize> = (0..n).filter(|&i| !lines[i]).collect();
    if budget == 0 {
        return Ok(lines);
    }
    let center = n / 2;
    let mut rng = Rng::new(spec.seed);
    let chosen: Vec<usize> = match spec.family {
        KSpaceFamily::Periodic => {
            let step = outer.len() as f64 / budget as f64;
            (0..budget)
                .map(|j| outer[(((j as f64 + 0.5) * step) as usize).min(outer.len() - 1)])
                .collect()
        }
        KSpaceFamily::Random => rng
            .choose_k(outer.len(), budget)?
            .into_iter()
            .map(|i| outer[i])
            .collect(),
        KSpaceFamily::Parametric { alpha, beta } => {
            let weights: Vec<f64> = outer
                .iter()
                .map(|&i| (1.0 + alpha * i.abs_diff(center) as f64).powf(-beta))
                .collect();
            sequential_draws(&weights, budget, &mut rng)
                .into_iter()
                .map(|i| outer[i])
                .collect()
        }
        KSpaceFamily::PoissonGap => poisson_gap(n, start, spec.acs, budget, spec.seed),
    };
    for i in chosen {
        lines[i] = true;
    }
    Ok(lines)
}

/// Line mask broadcast to `readout x n_lines`.
pub fn kspace_mask(spec: &KSpaceMaskSpec) -> Result<Mask> {
    Mask::from_columns(spec.readout, &kspace_lines(spec)?)
}

/// `k` draws without replacement, each proportional to the remaining weights.
fn sequential_draws(weights: &[f64], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut avail: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total = kahan_sum(avail.iter().map(|&i| weights[i]));
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = avail.len() - 1;
        for (j, &i) in avail.iter().enumerate() {
            acc += weights[i];
            if target < acc {
                pick = j;
                break;
            }
        }
        out.push(avail.remove(pick));
    }
    out
}

/// Gap walk outward from both ACS edges.
///
/// At line `k` the next gap is `1 + Poisson(c * max(0, |k - n/2| - acs))`,
/// one uniform per gap from a stream seeded with `seed`. The rate constant
/// `c` is bisected with the same stream each time; surplus lines are trimmed
/// farthest from the centre first.
fn poisson_gap(n: usize, start: usize, acs: usize, budget: usize, seed: u64) -> Vec<usize> {
    let center = n / 2;
    let walk = |c: f64| -> Vec<usize> {
        let mut rng = Rng::new(seed);
        let mut picked = Vec::new();
        for side in [-1isize, 1] {
            let mut pos = if side < 0 {
                start as isize - 1
            } else {
                (start + acs) as isize
            };
            while pos >= 0 && (pos as usize) < n {
                picked.push(pos as usize);
                let d = (pos as usize).abs_diff(center) as f64;
                let lam = c * (d - acs as f64).max(0.0);
                let u = rng.uniform();
                let gap = if lam >= n as f64 {
                    n
                } else {
                    1 + crate::numerics::poisson_quantile(lam, u) as usize
                };
                pos += side * gap as isize;
            }
        }
        picked
    };
    let outer_total = n - acs;
    if budget >= outer_total {
        return walk(0.0);
    }
    let mut hi = 1.0;
    while walk(hi).len() > budget && hi < 1e9 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if walk(mid).len() > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let at_hi = walk(hi);
    if at_hi.len() == budget {
        return at_hi;
    }
    let mut picked = walk(lo);
    picked.sort_by_key(|&i| (std::cmp::Reverse(i.abs_diff(center)), i));
    let extra = picked.len().saturating_sub(budget);
    picked.split_off(extra)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaAxis {
    Rx,
    Tx,
    Both,
}

impl std::str::FromStr for AntennaAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rx" => Ok(Self::Rx),
            "tx" => Ok(Self::Tx),
            "both" => Ok(Self::Both),
            _ => param(format!("unknown axis '{s}' (rx|tx|both)")),
        }
    }
}

/// Antenna deactivation on an `n_rx x n_tx` channel matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntennaMaskSpec {
    pub n_rx: usize,
    pub n_tx: usize,
    pub geometry: Geometry,
    pub interval_d: usize,
    /// Random geometry only; defaults to the periodic off-count for `interval_d`.
    pub off_budget: Option<usize>,
    pub axis: AntennaAxis,
    pub seed: u64,
}

/// Indices `i` in `0..n` with `i mod d == 0`.
pub fn periodic_off(n: usize, d: usize) -> Vec<usize> {
    (0..n).step_by(d.max(1)).collect()
}

/// Deactivated indices on each axis `(rx, tx)`.
pub fn antenna_off_sets(spec: &AntennaMaskSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if spec.interval_d == 0 {
        return param("interval_d must be >= 1");
    }
    if spec.n_rx == 0 || spec.n_tx == 0 {
        return param("antenna counts must be >= 1");
    }
    let mut rng = Rng::new(spec.seed);
    let mut pick = |n: usize| -> Result<Vec<usize>> {
        match spec.geometry {
            Geometry::Periodic => Ok(periodic_off(n, spec.interval_d)),
            Geometry::Random => {
                let k = spec
                    .off_budget
                    .unwrap_or_else(|| n.div_ceil(spec.interval_d));
                if k > n {
                    return param(format!("off_budget {k} exceeds axis length {n}"));
                }
                rng.choose_k(n, k)
            }
        }
    };
    let rx = if spec.axis != AntennaAxis::Tx {
        pick(spec.n_rx)?
    } else {
        Vec::new()
    };
    let tx = if spec.axis != AntennaAxis::Rx {
        pick(spec.n_tx)?
    } else {
        Vec::new()
    };
    Ok((rx, tx))
}

/// Keeps entries whose row and column antennas are both active.
pub fn antenna_mask(spec: &AntennaMaskSpec) -> Result<Mask> {
    let (rx, tx) = antenna_off_sets(spec)?;
    let mut row_on = vec![true; spec.n_rx];
    let mut col_on = vec![true; spec.n_tx];
    rx.iter().for_each(|&i| row_on[i] = false);
    tx.iter().for_each(|&i| col_on[i] = false);
    let kept = (0..spec.n_rx * spec.n_tx)
        .map(|i| row_on[i / spec.n_tx] && col_on[i % spec.n_tx])
        .collect();
    Mask::from_vec(spec.n_rx, spec.n_tx, kept)
}
