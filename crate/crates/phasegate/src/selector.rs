//! Zero-training acquisition design: mask parameter search, Husimi-parameter
//! ablations and quality-entropy correlation.
//!
//! Sample `i` of any study uses mask seed `derive_seed(seed, i)`, shared by
//! every grid cell, so cells differ only in their parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::masks::{kspace_mask, KSpaceFamily, KSpaceMaskSpec, Mask};
use crate::mri::{
    kspace_l2, psnr, rss_reconstruct, serialize_psnr, zero_fill, MagnitudeImage, MriMetrics,
    MultiCoilKSpace,
};
use crate::numerics::stats::{mean, spearman, summarize};
use crate::numerics::{derive_seed, ols_pearson, FitResult};
use crate::phase_space::{delta_s, HusimiParams, Orientation, Weighting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    MinAbsDeltaS,
    MinKspaceL2,
    MaxZeroFilledPsnr,
}

impl SelectionCriterion {
    pub fn orientation(&self) -> Orientation {
        match self {
            Self::MaxZeroFilledPsnr => Orientation::HigherBetter,
            _ => Orientation::LowerBetter,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MinAbsDeltaS => "min_abs_delta_s",
            Self::MinKspaceL2 => "min_kspace_l2",
            Self::MaxZeroFilledPsnr => "max_zero_filled_psnr",
        }
    }
}

impl std::str::FromStr for SelectionCriterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_abs_delta_s" | "delta_s" => Ok(Self::MinAbsDeltaS),
            "min_kspace_l2" | "kspace_l2" => Ok(Self::MinKspaceL2),
            "max_zero_filled_psnr" | "psnr" => Ok(Self::MaxZeroFilledPsnr),
            _ => param(format!(
                "unknown criterion '{s}' (min_abs_delta_s|min_kspace_l2|max_zero_filled_psnr)"
            )),
        }
    }
}

impl std::fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shared settings of the line-mask studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub accel: f64,
    pub acs: usize,
    pub params: HusimiParams,
    pub weighting: Weighting,
    pub seed: u64,
}

fn mask_for(
    k: &MultiCoilKSpace,
    family: KSpaceFamily,
    accel: f64,
    acs: usize,
    seed: u64,
) -> Result<Mask> {
    let (rows, cols) = k.shape();
    kspace_mask(&KSpaceMaskSpec {
        n_lines: cols,
        readout: rows,
        acs,
        accel,
        family,
        seed,
    })
}

/// Fully sampled reference images, one per sample.
pub fn references(samples: &[MultiCoilKSpace]) -> Result<Vec<MagnitudeImage>> {
    samples.par_iter().map(rss_reconstruct).collect()
}

/// All metrics of every sample under one family and acceleration.
pub fn evaluate_family(
    samples: &[MultiCoilKSpace],
    refs: &[MagnitudeImage],
    family: KSpaceFamily,
    s: &StudySettings,
) -> Result<Vec<MriMetrics>> {
    samples
        .par_iter()
        .zip(refs)
        .enumerate()
        .map(|(i, (k, full))| {
            let m = mask_for(k, family, s.accel, s.acs, derive_seed(s.seed, i as u64))?;
            crate::mri::evaluate_against(k, full, &m, &s.params, s.weighting)
        })
        .collect()
}

/// One (alpha, beta) cell of a selection score table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    #[serde(serialize_with = "serialize_psnr")]
    pub mean: f64,
    pub std: f64,
    #[serde(serialize_with = "serialize_psnr")]
    pub min: f64,
    #[serde(serialize_with = "serialize_psnr")]
    pub max: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best_alpha: f64,
    pub best_beta: f64,
    pub criterion: SelectionCriterion,
    pub score_table: Vec<ScoreRow>,
    pub calibration_ids: Vec<String>,
    pub settings: StudySettings,
    pub tie_break: String,
}

pub const TIE_BREAK: &str =
    "scores rounded to 1e-9; ties resolved by the lexicographically smallest (alpha, beta)";

fn rounded(v: f64) -> f64 {
    if v.is_finite() {
        (v * 1e9).round()
    } else {
        v
    }
}

/// Index of the best row under the documented tie-break.
pub fn best_row(rows: &[(f64, f64, f64)], orientation: Orientation) -> Option<usize> {
    let key = |i: usize| {
        let v = rounded(rows[i].2);
        match orientation {
            Orientation::LowerBetter => v,
            Orientation::HigherBetter => -v,
        }
    };
    (0..rows.len()).min_by(|&a, &b| {
        key(a)
            .total_cmp(&key(b))
            .then(rows[a].0.total_cmp(&rows[b].0))
            .then(rows[a].1.total_cmp(&rows[b].1))
    })
}

/// Grid search of the parametric line density on calibration data.
///
/// Every (alpha, beta) pair scores each calibration sample against its fully
/// sampled reference; cells are ranked by the mean score.
pub fn select_mask_params(
    calibration: &[MultiCoilKSpace],
    calibration_ids: &[String],
    alphas: &[f64],
    betas: &[f64],
    criterion: SelectionCriterion,
    s: &StudySettings,
) -> Result<SelectionResult> {
    if calibration.is_empty() || alphas.is_empty() || betas.is_empty() {
        return param("calibration set and grids must be nonempty");
    }
    if calibration_ids.len() != calibration.len() {
        return param("one id per calibration sample is required");
    }
    let refs = references(calibration)?;
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..calibration.len()).map(move |i| (c, i)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let (alpha, beta) = cells[c];
            let k = &calibration[i];
            let m = mask_for(
                k,
                KSpaceFamily::Parametric { alpha, beta },
                s.accel,
                s.acs,
                derive_seed(s.seed, i as u64),
            )?;
            match criterion {
                SelectionCriterion::MinKspaceL2 => kspace_l2(k, &m),
                SelectionCriterion::MinAbsDeltaS => {
                    let zf = zero_fill(k, &m, refs[i].norm_factor)?;
                    Ok(
                        delta_s(&refs[i].to_field(), &zf.to_field(), &s.params, s.weighting)?
                            .abs_delta,
                    )
                }
                SelectionCriterion::MaxZeroFilledPsnr => {
                    let zf = zero_fill(k, &m, refs[i].norm_factor)?;
                    psnr(&refs[i], &zf, 1.0)
                }
            }
        })
        .collect::<Result<_>>()?;
    let n = calibration.len();
    let table: Vec<ScoreRow> = cells
        .iter()
        .enumerate()
        .map(|(c, &(alpha, beta))| {
            let values = scores[c * n..(c + 1) * n].to_vec();
            let sm = summarize(&values);
            ScoreRow {
                alpha,
                beta,
                n,
                mean: if values.iter().all(|v| *v == f64::INFINITY) {
                    f64::INFINITY
                } else {
                    sm.mean
                },
                std: if sm.std.is_finite() { sm.std } else { 0.0 },
                min: sm.min,
                max: sm.max,
                values,
            }
        })
        .collect();
    let triples: Vec<(f64, f64, f64)> = table.iter().map(|r| (r.alpha, r.beta, r.mean)).collect();
    let best = best_row(&triples, criterion.orientation()).expect("nonempty grid");
    Ok(SelectionResult {
        best_alpha: table[best].alpha,
        best_beta: table[best].beta,
        criterion,
        score_table: table,
        calibration_ids: calibration_ids.to_vec(),
        settings: s.clone(),
        tie_break: TIE_BREAK.to_string(),
    })
}

pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0];
pub const DEFAULT_BETAS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub wins: Vec<usize>,
    pub sigma_ratios: Vec<f64>,
    pub hop_ratios: Vec<f64>,
    pub families: Vec<KSpaceFamily>,
    pub accels: Vec<f64>,
}

impl AblationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.wins.is_empty()
            || self.sigma_ratios.is_empty()
            || self.hop_ratios.is_empty()
            || self.families.is_empty()
            || self.accels.is_empty()
        {
            return param("every ablation axis needs at least one value");
        }
        if self.wins.contains(&0) {
            return param("window sizes must be positive");
        }
        if self
            .sigma_ratios
            .iter()
            .chain(&self.hop_ratios)
            .any(|&r| !(r > 0.0 && r.is_finite()))
        {
            return param("sigma and hop ratios must be positive");
        }
        if self.hop_ratios.iter().any(|&r| r > 1.0) {
            return param("hop ratios must not exceed 1");
        }
        Ok(())
    }

    /// `sigma = win * ratio`, `hop = max(1, round(win * ratio))`.
    pub fn params(win: usize, sigma_ratio: f64, hop_ratio: f64) -> Result<HusimiParams> {
        let hop = ((win as f64 * hop_ratio).round() as usize).max(1);
        HusimiParams::new(win, win as f64 * sigma_ratio, hop)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub win: usize,
    pub sigma: f64,
    pub hop: usize,
    pub family: String,
    pub accel: f64,
    pub sample: usize,
    pub abs_delta_s: Option<f64>,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub win: usize,
    pub sigma_ratio: f64,
    pub hop_ratio: f64,
    pub sigma: f64,
    pub hop: usize,
    pub family: String,
    pub accel: f64,
    pub skipped: bool,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighbourCorrelation {
    pub win_a: usize,
    pub win_b: usize,
    pub cells: usize,
    pub spearman: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub rows: Vec<AblationRow>,
    pub cells: Vec<AblationCell>,
    pub neighbours: Vec<NeighbourCorrelation>,
}

impl AblationResult {
    /// Mean |delta S| of a cell, if present and not skipped.
    pub fn cell_mean(
        &self,
        win: usize,
        sigma_ratio: f64,
        hop_ratio: f64,
        family: &str,
        accel: f64,
    ) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| {
                c.win == win
                    && c.sigma_ratio == sigma_ratio
                    && c.hop_ratio == hop_ratio
                    && c.family == family
                    && c.accel == accel
            })
            .filter(|c| !c.skipped)
            .map(|c| c.mean)
    }
}

/// Sweeps Husimi parameters over fixed masks and zero-filled images.
///
/// Masks depend only on (family, accel, sample); a window that does not fit
/// the data marks its cells skipped. Neighbouring window sizes are compared
/// by the Spearman correlation of their cell means over the remaining axes.
pub fn ablation_sweep(
    data: &[MultiCoilKSpace],
    grid: &AblationGrid,
    acs: usize,
    weighting: Weighting,
    seed: u64,
) -> Result<AblationResult> {
    grid.validate()?;
    if data.is_empty() {
        return param("ablation needs at least one sample");
    }
    let refs = references(data)?;
    let min_side = data
        .iter()
        .map(|k| k.shape().0.min(k.shape().1))
        .min()
        .unwrap_or(0);
    let acquisitions: Vec<(usize, usize, usize)> = (0..grid.families.len())
        .flat_map(|f| {
            (0..grid.accels.len()).flat_map(move |a| (0..data.len()).map(move |i| (f, a, i)))
        })
        .collect();
    let images: Vec<MagnitudeImage> = acquisitions
        .par_iter()
        .map(|&(f, a, i)| {
            let m = mask_for(
                &data[i],
                grid.families[f],
                grid.accels[a],
                acs,
                derive_seed(seed, i as u64),
            )?;
            zero_fill(&data[i], &m, refs[i].norm_factor)
        })
        .collect::<Result<_>>()?;
    let mut settings = Vec::new();
    for &win in &grid.wins {
        for &sr in &grid.sigma_ratios {
            for &hr in &grid.hop_ratios {
                settings.push((win, sr, hr));
            }
        }
    }
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &(win, sr, hr) in &settings {
        let p = AblationGrid::params(win, sr, hr)?;
        let skipped = win > min_side;
        for (f, family) in grid.families.iter().enumerate() {
            for (a, &accel) in grid.accels.iter().enumerate() {
                let vals: Vec<Option<f64>> = if skipped {
                    vec![None; data.len()]
                } else {
                    (0..data.len())
                        .into_par_iter()
                        .map(|i| {
                            let img = &images[(f * grid.accels.len() + a) * data.len() + i];
                            Ok(Some(
                                delta_s(&refs[i].to_field(), &img.to_field(), &p, weighting)?
                                    .abs_delta,
                            ))
                        })
                        .collect::<Result<_>>()?
                };
                for (i, v) in vals.iter().enumerate() {
                    rows.push(AblationRow {
                        win,
                        sigma: p.sigma,
                        hop: p.hop,
                        family: family.label(),
                        accel,
                        sample: i,
                        abs_delta_s: *v,
                        skipped,
                    });
                }
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                let sm = summarize(&present);
                cells.push(AblationCell {
                    win,
                    sigma_ratio: sr,
                    hop_ratio: hr,
                    sigma: p.sigma,
                    hop: p.hop,
                    family: family.label(),
                    accel,
                    skipped,
                    n: sm.n,
                    mean: sm.mean,
                    std: sm.std,
                    min: sm.min,
                    q25: sm.q25,
                    median: sm.median,
                    q75: sm.q75,
                    max: sm.max,
                });
            }
        }
    }
    let mut wins = grid.wins.clone();
    wins.sort_unstable();
    wins.dedup();
    let neighbours = wins
        .windows(2)
        .map(|w| {
            let (mut xa, mut xb) = (Vec::new(), Vec::new());
            for ca in cells.iter().filter(|c| c.win == w[0] && !c.skipped) {
                if let Some(cb) = cells.iter().find(|c| {
                    c.win == w[1]
                        && !c.skipped
                        && c.sigma_ratio == ca.sigma_ratio
                        && c.hop_ratio == ca.hop_ratio
                        && c.family == ca.family
                        && c.accel == ca.accel
                }) {
                    xa.push(ca.mean);
                    xb.push(cb.mean);
                }
            }
            NeighbourCorrelation {
                win_a: w[0],
                win_b: w[1],
                cells: xa.len(),
                spearman: spearman(&xa, &xb).ok().filter(|_| xa.len() >= 2),
            }
        })
        .collect();
    Ok(AblationResult {
        rows,
        cells,
        neighbours,
    })
}

/// OLS fit of quality against `|delta S|` with Pearson r and its interval.
///
/// Rows are `(abs_delta_s, quality)`.
pub fn correlate_quality_entropy(rows: &[(f64, f64)]) -> Result<FitResult> {
    if rows.len() < 2 {
        return param("need at least two rows to correlate");
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    ols_pearson(&xs, &ys)
}

/// Per-configuration means of a family/acceleration study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub family: String,
    pub accel: f64,
    pub n: usize,
    #[serde(serialize_with = "serialize_psnr")]
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub mean_kspace_l2: f64,
    pub mean_abs_delta_s: f64,
}

/// Evaluates every (family, accel) pair on the samples.
pub fn family_study(
    samples: &[MultiCoilKSpace],
    configs: &[(KSpaceFamily, f64)],
    acs: usize,
    params: &HusimiParams,
    weighting: Weighting,
    seed: u64,
) -> Result<Vec<ConfigSummary>> {
    let refs = references(samples)?;
    configs
        .iter()
        .map(|&(family, accel)| {
            let s = StudySettings {
                accel,
                acs,
                params: params.clone(),
                weighting,
                seed,
            };
            let m = evaluate_family(samples, &refs, family, &s)?;
            let col = |f: fn(&MriMetrics) -> f64| mean(&m.iter().map(f).collect::<Vec<_>>());
            Ok(ConfigSummary {
                family: family.label(),
                accel,
                n: m.len(),
                mean_psnr: col(|x| x.psnr_db),
                mean_ssim: col(|x| x.ssim),
                mean_kspace_l2: col(|x| x.kspace_l2),
                mean_abs_delta_s: col(|x| x.abs_delta_s),
            })
        })
        .collect()
}
