//! Clustered geometric MIMO channels, deactivation audits and a low-rank
//! completion baseline.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::masks::{antenna_mask, AntennaAxis, AntennaMaskSpec, Geometry, Mask};
use crate::numerics::{derive_seed, kahan_sum, Grid2C, Rng};
use crate::phase_space::{delta_s, DeltaSReport, HusimiParams, Weighting};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub n_rx: usize,
    pub n_tx: usize,
    pub n_clusters: usize,
    pub paths_per_cluster: usize,
    pub angular_spread_deg: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_rx: 16,
            n_tx: 64,
            n_clusters: 3,
            paths_per_cluster: 10,
            angular_spread_deg: 7.5,
            snr_db: 15.0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn n_paths(&self) -> usize {
        self.n_clusters * self.paths_per_cluster
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx < 2 || self.n_tx < 2 {
            return param(format!(
                "need at least 2x2 antennas, got {}x{}",
                self.n_rx, self.n_tx
            ));
        }
        if self.n_paths() == 0 {
            return param("at least one propagation path is required");
        }
        if !(self.angular_spread_deg > 0.0 && self.angular_spread_deg.is_finite()) {
            return param(format!(
                "angular spread must be positive, got {}",
                self.angular_spread_deg
            ));
        }
        if !self.snr_db.is_finite() {
            return param("snr_db must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub h: Grid2C,
    pub config: ChannelConfig,
}

/// Unit-norm half-wavelength ULA response, `exp(j pi i sin(angle)) / sqrt(n)`.
pub fn steering_vector(n: usize, angle_rad: f64) -> Vec<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    let phase = std::f64::consts::PI * angle_rad.sin();
    (0..n)
        .map(|i| Complex64::from_polar(s, phase * i as f64))
        .collect()
}

/// One propagation path: complex gain, arrival and departure angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub aoa: f64,
    pub aod: f64,
}

/// `sqrt(n_rx n_tx / L) * sum_l g_l a_rx(aoa_l) a_tx(aod_l)^H`.
pub fn channel_from_paths(n_rx: usize, n_tx: usize, paths: &[Path]) -> Result<Grid2C> {
    if paths.is_empty() {
        return param("at least one path is required");
    }
    let mut h = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
    for p in paths {
        let ar = steering_vector(n_rx, p.aoa);
        let at = steering_vector(n_tx, p.aod);
        for (i, a) in ar.iter().enumerate() {
            let ga = p.gain * a;
            for (j, b) in at.iter().enumerate() {
                h[i * n_tx + j] += ga * b.conj();
            }
        }
    }
    let scale = ((n_rx * n_tx) as f64 / paths.len() as f64).sqrt();
    Grid2C::from_vec(n_rx, n_tx, h.into_iter().map(|v| v * scale).collect())
}

/// Draws the paths of one realization.
///
/// Cluster `c` has path power proportional to `e^-c`, rescaled so the mean
/// path power is 1. For each cluster the centres (arrival, then departure)
/// are uniform in `(-pi/2, pi/2)`; each path then draws its gain and
/// Laplacian arrival and departure offsets whose standard deviation is the
/// configured spread.
pub fn draw_paths(cfg: &ChannelConfig, rng: &mut Rng) -> Vec<Path> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let powers: Vec<f64> = (0..cfg.n_clusters).map(|c| (-(c as f64)).exp()).collect();
    let mean_power = powers.iter().sum::<f64>() / cfg.n_clusters as f64;
    let b = cfg.angular_spread_deg.to_radians() / 2f64.sqrt();
    let mut paths = Vec::with_capacity(cfg.n_paths());
    for &pw in &powers {
        let centre_a = -half_pi + std::f64::consts::PI * rng.uniform();
        let centre_d = -half_pi + std::f64::consts::PI * rng.uniform();
        for _ in 0..cfg.paths_per_cluster {
            let gain = rng.complex_gauss(pw / mean_power);
            let aoa = centre_a + rng.laplace(b);
            let aod = centre_d + rng.laplace(b);
            paths.push(Path { gain, aoa, aod });
        }
    }
    paths
}

pub fn gen_channel(cfg: &ChannelConfig) -> Result<Channel> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let paths = draw_paths(cfg, &mut rng);
    Ok(Channel {
        h: channel_from_paths(cfg.n_rx, cfg.n_tx, &paths)?,
        config: cfg.clone(),
    })
}

/// Adds circular Gaussian noise with `||H||^2 / E||W||^2 = 10^(snr/10)`.
pub fn add_noise(ch: &Channel, snr_db: f64, rng: &mut Rng) -> Result<Channel> {
    let n = ch.h.len() as f64;
    let var = ch.h.energy() / (n * 10f64.powf(snr_db / 10.0));
    let data: Vec<Complex64> =
        ch.h.as_slice()
            .iter()
            .map(|&v| v + rng.complex_gauss(var))
            .collect();
    Ok(Channel {
        h: Grid2C::from_vec(ch.h.rows(), ch.h.cols(), data)?,
        config: ch.config.clone(),
    })
}

/// `||H - H_est||_F^2 / ||H||_F^2`.
pub fn nmse(h_true: &Grid2C, h_est: &Grid2C) -> Result<f64> {
    h_true.ensure_same_shape(h_est)?;
    let den = h_true.energy();
    if !(den > 0.0) {
        return Err(Error::Degenerate(
            "reference channel has zero energy".into(),
        ));
    }
    let num = kahan_sum(
        h_true
            .as_slice()
            .iter()
            .zip(h_est.as_slice())
            .map(|(a, b)| (a - b).norm_sqr()),
    );
    Ok(num / den)
}

fn to_matrix(g: &Grid2C) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(g.rows(), g.cols(), g.as_slice())
}

/// Best rank-`r` approximation, written back row-major.
fn truncate_rank(y: &[Complex64], rows: usize, cols: usize, r: usize) -> Vec<Complex64> {
    let svd = DMatrix::from_row_slice(rows, cols, y).svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for &k in order.iter().take(r) {
        let s = svd.singular_values[k];
        for i in 0..rows {
            let us = u[(i, k)] * s;
            for j in 0..cols {
                out[i * cols + j] += us * vt[(k, j)];
            }
        }
    }
    out
}

/// Per-iteration diagnostics of [`baseline_complete_traced`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompletionTrace {
    /// Relative residual on observed entries after each rank projection.
    pub observed_residual: Vec<f64>,
    /// NMSE against the supplied reference after each iteration.
    pub nmse: Vec<f64>,
}

/// Iterative hard-thresholded completion.
///
/// Starting from the masked matrix, each iteration resets the observed
/// entries to their measured values and projects onto rank `rank_r`.
pub fn baseline_complete(
    h_masked: &Grid2C,
    m: &Mask,
    rank_r: usize,
    iters: usize,
) -> Result<Grid2C> {
    Ok(baseline_complete_traced(h_masked, m, rank_r, iters, None)?.0)
}

pub fn baseline_complete_traced(
    h_masked: &Grid2C,
    m: &Mask,
    rank_r: usize,
    iters: usize,
    reference: Option<&Grid2C>,
) -> Result<(Grid2C, CompletionTrace)> {
    let (rows, cols) = h_masked.shape();
    if m.shape() != (rows, cols) {
        return Err(Error::ShapeMismatch {
            left: (rows, cols),
            right: m.shape(),
        });
    }
    if rank_r == 0 || rank_r > rows.min(cols) {
        return param(format!("rank {rank_r} must be in 1..={}", rows.min(cols)));
    }
    if iters == 0 {
        return param("iters must be >= 1");
    }
    if m.keep_count() == 0 {
        return Err(Error::Degenerate("every entry is masked".into()));
    }
    let kept = m.kept();
    let obs: Vec<Complex64> = h_masked
        .as_slice()
        .iter()
        .zip(kept)
        .map(|(&v, &k)| if k { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    let obs_energy = kahan_sum(obs.iter().map(|v| v.norm_sqr()));
    let mut x = obs.clone();
    let mut trace = CompletionTrace::default();
    for _ in 0..iters {
        let y: Vec<Complex64> = x
            .iter()
            .zip(&obs)
            .zip(kept)
            .map(|((&xv, &ov), &k)| if k { ov } else { xv })
            .collect();
        x = truncate_rank(&y, rows, cols, rank_r);
        if obs_energy > 0.0 {
            let res = kahan_sum(
                x.iter()
                    .zip(&obs)
                    .zip(kept)
                    .filter(|(_, &k)| k)
                    .map(|((a, b), _)| (a - b).norm_sqr()),
            );
            trace.observed_residual.push((res / obs_energy).sqrt());
        }
        if let Some(r) = reference {
            trace
                .nmse
                .push(nmse(r, &Grid2C::from_vec(rows, cols, x.clone())?)?);
        }
    }
    Ok((Grid2C::from_vec(rows, cols, x)?, trace))
}

/// Entropy change of `|H|` under an antenna mask.
///
/// Both magnitudes are divided by the maximum of the unmasked `|H|`.
pub fn audit_channel(
    ch: &Channel,
    m: &Mask,
    p: &HusimiParams,
    weighting: Weighting,
) -> Result<DeltaSReport> {
    audit_matrix(&ch.h, m, p, weighting)
}

pub fn audit_matrix(
    h: &Grid2C,
    m: &Mask,
    p: &HusimiParams,
    weighting: Weighting,
) -> Result<DeltaSReport> {
    if m.shape() != h.shape() {
        return Err(Error::ShapeMismatch {
            left: h.shape(),
            right: m.shape(),
        });
    }
    let peak = h.max_abs();
    if !(peak > 0.0) {
        return Err(Error::Degenerate("channel is identically zero".into()));
    }
    let reference = Grid2C::from_vec(
        h.rows(),
        h.cols(),
        h.as_slice()
            .iter()
            .map(|v| Complex64::new(v.norm() / peak, 0.0))
            .collect(),
    )?;
    let acquired = Grid2C::from_vec(
        h.rows(),
        h.cols(),
        reference
            .as_slice()
            .iter()
            .zip(m.kept())
            .map(|(&v, &k)| if k { v } else { Complex64::new(0.0, 0.0) })
            .collect(),
    )?;
    delta_s(&reference, &acquired, p, weighting)
}

/// Settings for a batch of channel realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoStudy {
    pub channel: ChannelConfig,
    pub realizations: usize,
    pub intervals: Vec<usize>,
    pub geometries: Vec<Geometry>,
    pub axis: AntennaAxis,
    pub rank: usize,
    pub iters: usize,
    pub weighting: Weighting,
}

impl Default for MimoStudy {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::default(),
            realizations: 200,
            intervals: vec![2, 3, 4, 6, 8],
            geometries: vec![Geometry::Periodic, Geometry::Random],
            axis: AntennaAxis::Tx,
            rank: 4,
            iters: 30,
            weighting: Weighting::Energy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoRow {
    pub realization: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub d: usize,
    pub off_count: usize,
    pub delta_s: f64,
    pub abs_delta_s: f64,
    pub nmse: f64,
}

/// Runs every (realization, interval, geometry) combination.
///
/// Realization `i` uses channel seed `derive_seed(seed, i)`; its noise
/// stream and mask seeds are derived from that channel seed. Rows come back
/// ordered by realization, then interval, then geometry.
pub fn run_study(study: &MimoStudy, p: &HusimiParams) -> Result<Vec<MimoRow>> {
    study.channel.validate()?;
    if study.intervals.contains(&0) {
        return param("intervals must be >= 1");
    }
    let per: Vec<Vec<MimoRow>> = (0..study.realizations)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(study.channel.seed, i as u64);
            let cfg = ChannelConfig {
                seed,
                ..study.channel.clone()
            };
            let clean = gen_channel(&cfg)?;
            let noisy = add_noise(&clean, cfg.snr_db, &mut Rng::new(derive_seed(seed, 0)))?;
            let mut rows = Vec::new();
            for (di, &d) in study.intervals.iter().enumerate() {
                for &geometry in &study.geometries {
                    let spec = AntennaMaskSpec {
                        n_rx: cfg.n_rx,
                        n_tx: cfg.n_tx,
                        geometry,
                        interval_d: d,
                        off_budget: None,
                        axis: study.axis,
                        seed: derive_seed(seed, 1 + di as u64),
                    };
                    let m = antenna_mask(&spec)?;
                    let report = audit_channel(&noisy, &m, p, study.weighting)?;
                    let masked = crate::masks::apply_mask(&noisy.h, &m)?;
                    let est = baseline_complete(&masked, &m, study.rank, study.iters)?;
                    rows.push(MimoRow {
                        realization: i,
                        seed,
                        geometry,
                        d,
                        off_count: m.shape().0 * m.shape().1 - m.keep_count(),
                        delta_s: report.delta,
                        abs_delta_s: report.abs_delta,
                        nmse: nmse(&clean.h, &est)?,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Mean `delta_s` and NMSE per (geometry, d), in first-seen order.
pub fn summarize_study(rows: &[MimoRow]) -> Vec<(Geometry, usize, f64, f64)> {
    let mut keys: Vec<(Geometry, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.geometry, r.d)) {
            keys.push((r.geometry, r.d));
        }
    }
    keys.into_iter()
        .map(|(g, d)| {
            let sel: Vec<&MimoRow> = rows
                .iter()
                .filter(|r| r.geometry == g && r.d == d)
                .collect();
            let n = sel.len() as f64;
            let ds = kahan_sum(sel.iter().map(|r| r.delta_s)) / n;
            let e = kahan_sum(sel.iter().map(|r| r.nmse)) / n;
            (g, d, ds, e)
        })
        .collect()
}

#[doc(hidden)]
pub fn singular_values(g: &Grid2C) -> Vec<f64> {
    let mut s: Vec<f64> = to_matrix(g).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
